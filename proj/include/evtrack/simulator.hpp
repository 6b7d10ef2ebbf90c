#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evtrack/event.hpp"
#include "evtrack/geometry.hpp"
#include "evtrack/image.hpp"
#include "evtrack/increment.hpp"
#include "evtrack/track.hpp"

namespace evtrack {

struct Keyframe {
  double t = 0.0;
  double theta = 0.0;
  double tx = 0.0;
  double ty = 0.0;
};

// Planar rigid motion t -> W(.; t) taking texture coordinates to sensor
// coordinates, linearly interpolated between keyframes.
class MotionTrajectory {
 public:
  explicit MotionTrajectory(std::vector<Keyframe> keyframes);

  static MotionTrajectory stationary(WarpSE2 pose, double duration);
  static MotionTrajectory constant_velocity(Vec2 offset, Vec2 velocity, double duration);

  // Throws DomainError outside [start(), end()].
  WarpSE2 at(double t) const;
  double start() const { return keys_.front().t; }
  double end() const { return keys_.back().t; }
  const std::vector<Keyframe>& keyframes() const { return keys_; }

  // Fastest image-point speed (px/s) over the sensor rectangle, maximised
  // over keyframe segments.
  double max_speed(int width, int height) const;

 private:
  std::vector<Keyframe> keys_;
};

// Texture resampling used for rendering. Bilinear has a piecewise-constant
// derivative, so brightness increments over sub-pixel motions carry a
// phase-dependent offset of up to half a pixel; Catmull-Rom cubic
// convolution keeps the derivative continuous. Both are exact on affine
// images and interpolate at integer positions.
enum class Interpolation { bilinear, cubic };

struct SimConfig {
  double contrast_threshold = 0.15;  // C, log-intensity units
  int width = 240;
  int height = 180;
  double duration = 1.0;
  double frame_period = 0.05;
  double dt = 0.0;  // <= 0 selects default_time_step()
  double log_eps = kDefaultLogEps;
  Interpolation interpolation = Interpolation::bilinear;
  // Non-ideal effects, off by default.
  double timestamp_jitter = 0.0;    // std-dev of per-event time noise, seconds
  double threshold_mismatch = 0.0;  // relative std-dev of per-pixel thresholds
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// One tenth of the time the fastest point needs to cross a pixel, capped at
// the frame period.
double default_time_step(const MotionTrajectory& traj, const SimConfig& config);

// output(u) = texture(W^-1(u; traj(t))); texture mean outside the texture.
// Sampled with config.interpolation.
LogFrame render_frame(const LogFrame& texture, const MotionTrajectory& traj, double t, const SimConfig& config);

// Ideal event camera: every dt each pixel's log intensity is compared to
// its reference; each crossed multiple of C emits one event with an
// interpolated timestamp. Output is sorted by (t, y, x, polarity).
EventStream simulate_events(const LogFrame& texture, const MotionTrajectory& traj, const SimConfig& config);

// Noise-free increment (L(t1) - L(t0)) / C over the window, the quantity
// the events of [t0, t1) approximate.
IncrementPatch exact_increment(const LogFrame& texture, const MotionTrajectory& traj, double t0, double t1,
                               const PatchWindow& window, const SimConfig& config);

// Frames at t = 0, frame_period, ... <= duration.
std::vector<LogFrame> render_frames(const LogFrame& texture, const MotionTrajectory& traj, const SimConfig& config);

// Track i follows seed i (sensor coordinates at traj.start()) through the
// scene, sampled every sample_period up to config.duration, cut when the point
// leaves the sensor.
std::vector<GroundTruthTrack> ground_truth_tracks(std::span<const Vec2> seeds, const MotionTrajectory& traj,
                                                  double sample_period, const SimConfig& config);

}  // namespace evtrack
