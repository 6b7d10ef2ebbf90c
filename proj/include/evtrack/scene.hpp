#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evtrack/eval.hpp"
#include "evtrack/event.hpp"
#include "evtrack/icp.hpp"
#include "evtrack/increment.hpp"
#include "evtrack/simulator.hpp"
#include "evtrack/textures.hpp"
#include "evtrack/tracker.hpp"

namespace evtrack {

enum class TextureKind { checkerboard, noise, photo, shapes };

std::string_view to_string(TextureKind k);
TextureKind texture_kind_from_string(std::string_view s);  // throws ConfigError

// A synthetic scene: a texture larger than the sensor translated (and
// optionally rotated about the sensor centre) at constant velocity.
struct SceneSpec {
  TextureKind texture = TextureKind::noise;
  std::uint64_t texture_seed = 1;
  std::string photo_path;  // PGM, used for TextureKind::photo
  int checker_square = 24;
  double noise_cell = 6.0;
  int shape_count = 60;
  textures::Options texture_options;
  int margin = 40;  // texture border beyond the sensor, pixels
  Vec2 velocity{26.0, 15.0};  // px/s of the scene on the sensor
  double angular_velocity = 0.0;  // rad/s
  double gt_period = 0.005;
  SimConfig sim{.interpolation = Interpolation::cubic};

  void validate() const;  // throws ConfigError
};

struct SceneData {
  LogFrame texture;
  MotionTrajectory trajectory{MotionTrajectory::stationary({}, 0.0)};
  EventStream events;
  std::vector<LogFrame> frames;  // as stored in 8-bit files
};

LogFrame make_texture(const SceneSpec& spec);
MotionTrajectory make_trajectory(const SceneSpec& spec);
SceneData simulate_scene(const SceneSpec& spec);

// Corners of the first frame, as a tracker with this config would pick them.
std::vector<PixelPos> detect_seeds(const SceneData& scene, const TrackerConfig& config);

enum class Method { proposed, icp };

struct RunResult {
  std::vector<PixelPos> seeds;
  std::vector<FeatureTrack> tracks;
  std::vector<GroundTruthTrack> ground_truth;
  EvaluationSummary summary;
  double seconds = 0.0;  // tracking wall time
};

// Tracks the scene from `seeds` (or detected corners when empty) and scores
// the result against exact ground truth.
RunResult run_scene(const SceneData& scene, const SceneSpec& spec, const TrackerConfig& config, Method method,
                    std::span<const PixelPos> seeds = {});

struct SweepRow {
  int patch_size = 0;
  double mean_error_px = 0.0;
  double mean_age_s = 0.0;
  std::size_t tracks = 0;
};

// Seeds whose side x side window stays on the sensor along their exact
// trajectory for the whole scene.
std::vector<PixelPos> seeds_staying_inside(const SceneData& scene, const SceneSpec& spec,
                                           std::span<const PixelPos> seeds, int side);

// One run per patch size on the same events, frames and seed corners. The
// seeds are detected once with the largest size's border margin and kept
// only if that window never leaves the sensor, so age reflects tracking
// loss rather than a size-dependent exit time.
std::vector<SweepRow> patch_size_sweep(const SceneData& scene, const SceneSpec& spec, const TrackerConfig& base,
                                       std::span<const int> sizes, Method method = Method::proposed);

}  // namespace evtrack
