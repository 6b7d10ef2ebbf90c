#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evtrack/icp.hpp"
#include "evtrack/scene.hpp"
#include "evtrack/tracker.hpp"

namespace evtrack {

struct PathsConfig {
  std::filesystem::path out_dir = "out";
  // Inputs default to the files cmd_simulate writes into out_dir.
  std::filesystem::path events;
  std::filesystem::path frames;  // frame index
  std::filesystem::path seeds;
  std::filesystem::path tracks;
  std::filesystem::path disposal;
  std::filesystem::path ground_truth;

  std::filesystem::path events_or_default() const { return events.empty() ? out_dir / "events.txt" : events; }
  std::filesystem::path frames_or_default() const { return frames.empty() ? out_dir / "frames.txt" : frames; }
  std::filesystem::path seeds_or_default() const { return seeds.empty() ? out_dir / "seeds.csv" : seeds; }
  std::filesystem::path tracks_or_default() const { return tracks.empty() ? out_dir / "tracks.csv" : tracks; }
  std::filesystem::path disposal_or_default() const {
    return disposal.empty() ? out_dir / "disposal.csv" : disposal;
  }
  std::filesystem::path ground_truth_or_default() const {
    return ground_truth.empty() ? out_dir / "ground_truth.csv" : ground_truth;
  }
};

struct ProfileConfig {
  int feature_id = 0;
  int update_index = 0;
  double half_range = 5.0;
  double step = 0.25;
  bool self_test = false;  // quadratic test cost instead of a tracked feature
};

struct EvalConfig {
  int survival_points = 100;
};

struct RunConfig {
  SceneSpec scene;
  TrackerConfig tracker;
  icp::IcpTrackerConfig baseline_options;  // base is ignored; tracker is used
  EvalConfig eval;
  ProfileConfig profile;
  std::vector<int> sweep_sizes{5, 9, 15, 19, 25, 31};
  PathsConfig paths;
  bool baseline = false;

  // Every field against its owner's invariants. Throws ConfigError naming
  // the field.
  void validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& config);  // canonical, sorted keys

// FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const RunConfig& config);

// Sets the texture and simulator seeds together.
void apply_seed(RunConfig& config, std::uint64_t seed);

}  // namespace evtrack
