#include "evtrack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "evtrack/error.hpp"
#include "evtrack/kernels.hpp"

namespace evtrack {

MotionTrajectory::MotionTrajectory(std::vector<Keyframe> keyframes) : keys_(std::move(keyframes)) {
  if (keys_.empty()) throw DomainError("trajectory needs at least one keyframe");
  for (std::size_t i = 1; i < keys_.size(); ++i)
    if (!(keys_[i].t > keys_[i - 1].t)) throw DomainError("trajectory keyframe times must strictly increase");
}

MotionTrajectory MotionTrajectory::stationary(WarpSE2 pose, double duration) {
  if (duration <= 0.0) return MotionTrajectory({{0.0, pose.theta, pose.t.x, pose.t.y}});
  return MotionTrajectory({{0.0, pose.theta, pose.t.x, pose.t.y}, {duration, pose.theta, pose.t.x, pose.t.y}});
}

MotionTrajectory MotionTrajectory::constant_velocity(Vec2 offset, Vec2 velocity, double duration) {
  if (duration <= 0.0) return MotionTrajectory({{0.0, 0.0, offset.x, offset.y}});
  return MotionTrajectory(
      {{0.0, 0.0, offset.x, offset.y}, {duration, 0.0, offset.x + velocity.x * duration, offset.y + velocity.y * duration}});
}

WarpSE2 MotionTrajectory::at(double t) const {
  if (!(t >= start() && t <= end()))
    throw DomainError("trajectory evaluated at t=" + std::to_string(t) + " outside [" + std::to_string(start()) +
                      ", " + std::to_string(end()) + "]");
  if (keys_.size() == 1) return {keys_[0].theta, {keys_[0].tx, keys_[0].ty}};
  auto hi = std::upper_bound(keys_.begin(), keys_.end(), t, [](double v, const Keyframe& k) { return v < k.t; });
  if (hi == keys_.end()) hi = keys_.end() - 1;
  if (hi == keys_.begin()) hi = keys_.begin() + 1;
  const Keyframe& a = *(hi - 1);
  const Keyframe& b = *hi;
  const double s = (t - a.t) / (b.t - a.t);
  return {a.theta + s * (b.theta - a.theta), {a.tx + s * (b.tx - a.tx), a.ty + s * (b.ty - a.ty)}};
}

double MotionTrajectory::max_speed(int width, int height) const {
  const Vec2 probes[5] = {{0, 0}, {width - 1.0, 0}, {0, height - 1.0}, {width - 1.0, height - 1.0},
                          {(width - 1) / 2.0, (height - 1) / 2.0}};
  double best = 0.0;
  for (std::size_t i = 1; i < keys_.size(); ++i) {
    const WarpSE2 a{keys_[i - 1].theta, {keys_[i - 1].tx, keys_[i - 1].ty}};
    const WarpSE2 b{keys_[i].theta, {keys_[i].tx, keys_[i].ty}};
    const double span = keys_[i].t - keys_[i - 1].t;
    for (const Vec2& c : probes) best = std::max(best, norm(b.apply(a.apply_inverse(c)) - c) / span);
  }
  return best;
}

void SimConfig::validate() const {
  if (!(contrast_threshold > 0.0)) throw ConfigError("sim.contrast_threshold must be > 0");
  if (width < 3 || height < 3) throw ConfigError("sim.width/height must be >= 3");
  if (!(duration >= 0.0)) throw ConfigError("sim.duration must be >= 0");
  if (!(frame_period > 0.0)) throw ConfigError("sim.frame_period must be > 0");
  if (dt > frame_period) throw ConfigError("sim.dt must not exceed sim.frame_period");
  if (!(log_eps > 0.0)) throw ConfigError("sim.log_eps must be > 0");
  if (timestamp_jitter < 0.0 || threshold_mismatch < 0.0) throw ConfigError("sim noise levels must be >= 0");
}

double default_time_step(const MotionTrajectory& traj, const SimConfig& config) {
  if (config.dt > 0.0) return config.dt;
  const double speed = traj.max_speed(config.width, config.height);
  if (speed <= 0.0) return config.frame_period;
  return std::min(config.frame_period, 0.1 / speed);
}

namespace {

kernels::AffineLattice sensor_lattice(const WarpSE2& pose, int width, int height) {
  // texture point for sensor pixel (i, j) = R^T ((i, j) - t)
  kernels::AffineLattice lat;
  lat.origin = pose.apply_inverse({0.0, 0.0});
  lat.col_step = pose.rotate_inverse({1.0, 0.0});
  lat.row_step = pose.rotate_inverse({0.0, 1.0});
  lat.cols = width;
  lat.rows = height;
  return lat;
}

// Catmull-Rom weights for taps at -1, 0, 1, 2 around the base sample.
inline void cubic_weights(double f, double w[4]) {
  const double f2 = f * f, f3 = f2 * f;
  w[0] = 0.5 * (-f3 + 2.0 * f2 - f);
  w[1] = 0.5 * (3.0 * f3 - 5.0 * f2 + 2.0);
  w[2] = 0.5 * (-3.0 * f3 + 4.0 * f2 + f);
  w[3] = 0.5 * (f3 - f2);
}

// Same domain rule as the bilinear fill: points outside [0, w-1] x [0, h-1]
// get the background. Taps beyond the border are clamped.
void cubic_fill(const ImageD& tex, const kernels::AffineLattice& lat, double background, std::span<double> out) {
  const int w = tex.width(), h = tex.height();
  std::size_t k = 0;
  for (int j = 0; j < lat.rows; ++j) {
    const Vec2 row = lat.origin + static_cast<double>(j) * lat.row_step;
    for (int i = 0; i < lat.cols; ++i, ++k) {
      const Vec2 p = row + static_cast<double>(i) * lat.col_step;
      if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= w - 1.0 && p.y <= h - 1.0)) {
        out[k] = background;
        continue;
      }
      const int x0 = std::min(static_cast<int>(p.x), w - 2), y0 = std::min(static_cast<int>(p.y), h - 2);
      double wx[4], wy[4];
      cubic_weights(p.x - x0, wx);
      cubic_weights(p.y - y0, wy);
      double acc = 0.0;
      for (int b = 0; b < 4; ++b) {
        const int yy = std::clamp(y0 - 1 + b, 0, h - 1);
        double r = 0.0;
        for (int a = 0; a < 4; ++a) r += wx[a] * tex(std::clamp(x0 - 1 + a, 0, w - 1), yy);
        acc += wy[b] * r;
      }
      out[k] = acc;
    }
  }
}

void render_into(const LogFrame& texture, double background, const WarpSE2& pose, const SimConfig& config,
                 std::span<double> out) {
  const auto lat = sensor_lattice(pose, config.width, config.height);
  if (config.interpolation == Interpolation::cubic)
    cubic_fill(texture.values, lat, background, out);
  else
    kernels::sample_fill(texture.values, lat, background, out);
}

}  // namespace

LogFrame render_frame(const LogFrame& texture, const MotionTrajectory& traj, double t, const SimConfig& config) {
  const WarpSE2 pose = traj.at(t);
  LogFrame out{t, ImageD(config.width, config.height)};
  render_into(texture, mean_value(texture.values), pose, config, out.values.values());
  return out;
}

IncrementPatch exact_increment(const LogFrame& texture, const MotionTrajectory& traj, double t0, double t1,
                               const PatchWindow& window, const SimConfig& config) {
  config.validate();
  if (!window.inside_sensor(config.width, config.height))
    throw BoundsError("exact_increment: window outside the sensor");
  const LogFrame a = render_frame(texture, traj, t0, config);
  const LogFrame b = render_frame(texture, traj, t1, config);
  IncrementPatch out{window, std::vector<double>(window.area())};
  const int h = window.half();
  std::size_t k = 0;
  for (int j = -h; j <= h; ++j)
    for (int i = -h; i <= h; ++i, ++k) {
      const int x = window.center.x + i, y = window.center.y + j;
      out.values[k] = (b.values(x, y) - a.values(x, y)) / config.contrast_threshold;
    }
  return out;
}

std::vector<LogFrame> render_frames(const LogFrame& texture, const MotionTrajectory& traj, const SimConfig& config) {
  config.validate();
  std::vector<LogFrame> frames;
  const double tol = 1e-9 * std::max(1.0, config.duration);
  for (int k = 0;; ++k) {
    const double t = k * config.frame_period;
    if (t > config.duration + tol) break;
    frames.push_back(render_frame(texture, traj, std::min(t, config.duration), config));
  }
  return frames;
}

EventStream simulate_events(const LogFrame& texture, const MotionTrajectory& traj, const SimConfig& config) {
  config.validate();
  if (traj.start() > 0.0 || traj.end() < config.duration)
    throw DomainError("simulate_events: trajectory does not cover [0, duration]");

  const int w = config.width, h = config.height;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  EventStream stream{w, h, {}};
  if (config.duration <= 0.0) return stream;

  const double dt = default_time_step(traj, config);
  const auto steps = static_cast<long>(std::ceil(config.duration / dt - 1e-9));
  const double background = mean_value(texture.values);

  std::mt19937_64 rng(config.seed);
  const double c = config.contrast_threshold;
  std::vector<double> c_pos(n, c), c_neg(n, c);
  if (config.threshold_mismatch > 0.0) {
    std::normal_distribution<double> dist(1.0, config.threshold_mismatch);
    for (std::size_t i = 0; i < n; ++i) {
      c_pos[i] = c * std::max(0.01, dist(rng));
      c_neg[i] = c * std::max(0.01, dist(rng));
    }
  }
  std::normal_distribution<double> jitter(0.0, config.timestamp_jitter > 0.0 ? config.timestamp_jitter : 1.0);

  std::vector<double> prev(n), cur(n);
  render_into(texture, background, traj.at(0.0), config, prev);
  std::vector<double> ref = prev;

  std::vector<Event> step_events;
  for (long k = 1; k <= steps; ++k) {
    const double t0 = config.duration * static_cast<double>(k - 1) / static_cast<double>(steps);
    const double t1 = k == steps ? config.duration : config.duration * static_cast<double>(k) / static_cast<double>(steps);
    render_into(texture, background, traj.at(t1), config, cur);

    step_events.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = cur[i] - ref[i];
      const double thr = diff >= 0.0 ? c_pos[i] : c_neg[i];
      if (std::abs(diff) < thr) continue;
      const long count = static_cast<long>(std::floor(std::abs(diff) / thr));
      const double sign = diff > 0.0 ? 1.0 : -1.0;
      const double change = cur[i] - prev[i];
      const auto x = static_cast<std::uint16_t>(i % static_cast<std::size_t>(w));
      const auto y = static_cast<std::uint16_t>(i / static_cast<std::size_t>(w));
      for (long m = 1; m <= count; ++m) {
        const double level = ref[i] + sign * static_cast<double>(m) * thr;
        double frac = change != 0.0 ? (level - prev[i]) / change : 1.0;
        frac = std::clamp(frac, 0.0, 1.0);
        double te = t0 + frac * (t1 - t0);
        if (config.timestamp_jitter > 0.0) te = std::max(0.0, te + jitter(rng));
        step_events.push_back({te, x, y, static_cast<std::int8_t>(sign > 0 ? 1 : -1)});
      }
      ref[i] += sign * static_cast<double>(count) * thr;
    }
    std::sort(step_events.begin(), step_events.end(), [](const Event& a, const Event& b) {
      if (a.t != b.t) return a.t < b.t;
      if (a.y != b.y) return a.y < b.y;
      if (a.x != b.x) return a.x < b.x;
      return a.polarity < b.polarity;
    });
    stream.events.insert(stream.events.end(), step_events.begin(), step_events.end());
    std::swap(prev, cur);
  }

  if (config.timestamp_jitter > 0.0)
    std::stable_sort(stream.events.begin(), stream.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
  return stream;
}

std::vector<GroundTruthTrack> ground_truth_tracks(std::span<const Vec2> seeds, const MotionTrajectory& traj,
                                                  double sample_period, const SimConfig& config) {
  if (!(sample_period > 0.0)) throw DomainError("ground_truth_tracks: sample_period must be > 0");
  const WarpSE2 pose0 = traj.at(traj.start());
  const double t_end = std::min(config.duration, traj.end());
  const double tol = 1e-9 * std::max(1.0, t_end);
  std::vector<GroundTruthTrack> tracks;
  for (std::size_t id = 0; id < seeds.size(); ++id) {
    GroundTruthTrack track{static_cast<int>(id), {}};
    const Vec2 anchor = pose0.apply_inverse(seeds[id]);
    for (long k = 0;; ++k) {
      const double t = traj.start() + static_cast<double>(k) * sample_period;
      if (t > t_end + tol) break;
      const Vec2 p = traj.at(std::min(t, t_end)).apply(anchor);
      if (p.x < 0.0 || p.y < 0.0 || p.x > config.width - 1 || p.y > config.height - 1) break;
      track.samples.push_back({std::min(t, t_end), p.x, p.y});
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

}  // namespace evtrack
