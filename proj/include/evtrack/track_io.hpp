#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "evtrack/track.hpp"

namespace evtrack {

// "id,t,x,y" with a header line and 6 decimals; used for both estimated and
// ground-truth tracks.
void write_tracks_csv(std::ostream& out, const std::vector<FeatureTrack>& tracks);
void write_tracks_csv(std::ostream& out, const std::vector<GroundTruthTrack>& tracks);
std::vector<GroundTruthTrack> read_tracks_csv(std::istream& in);
std::vector<GroundTruthTrack> load_tracks_csv(const std::filesystem::path& path);

// "id,t_created,t_disposed,reason,final_cost"
void write_disposal_csv(std::ostream& out, const std::vector<FeatureTrack>& tracks);
struct DisposalRecord {
  int id = 0;
  double t_created = 0.0;
  double t_disposed = 0.0;
  Disposal reason = Disposal::active;
  double final_cost = 0.0;
};
std::vector<DisposalRecord> read_disposal_csv(std::istream& in);

// Joins a tracks file and its disposal log back into FeatureTracks.
std::vector<FeatureTrack> load_feature_tracks(const std::filesystem::path& tracks_csv,
                                              const std::filesystem::path& disposal_csv);

// Writes to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace evtrack
