#pragma once

#include <string_view>
#include <vector>

namespace evtrack {

struct TrackPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct GroundTruthTrack {
  int id = 0;
  std::vector<TrackPoint> samples;
};

enum class Disposal { active, lost, exited };

std::string_view to_string(Disposal d);
Disposal disposal_from_string(std::string_view s);  // throws ParseError-compatible FormatError

// Estimated track of one feature. Samples are strictly increasing in time;
// the first one is the detection at t_created.
struct FeatureTrack {
  int id = 0;
  std::vector<TrackPoint> samples;
  double t_created = 0.0;
  double t_disposed = 0.0;  // end of stream for features still active
  Disposal reason = Disposal::active;
  double final_cost = 0.0;

  double age() const { return t_disposed - t_created; }
};

}  // namespace evtrack
