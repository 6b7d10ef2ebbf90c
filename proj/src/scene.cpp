#include "evtrack/scene.hpp"

#include <algorithm>
#include <chrono>

#include "evtrack/error.hpp"
#include "evtrack/harris.hpp"

namespace evtrack {

std::string_view to_string(TextureKind k) {
  switch (k) {
    case TextureKind::checkerboard: return "checkerboard";
    case TextureKind::noise: return "noise";
    case TextureKind::photo: return "photo";
    case TextureKind::shapes: return "shapes";
  }
  return "noise";
}

TextureKind texture_kind_from_string(std::string_view s) {
  for (TextureKind k : {TextureKind::checkerboard, TextureKind::noise, TextureKind::photo, TextureKind::shapes})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown texture '" + std::string(s) + "'");
}

void SceneSpec::validate() const {
  sim.validate();
  if (margin < 0) throw ConfigError("scene.margin must be >= 0");
  if (!(gt_period > 0.0)) throw ConfigError("scene.gt_period must be > 0");
  if (checker_square < 2) throw ConfigError("scene.checker_square must be >= 2");
  if (!(noise_cell > 1.0)) throw ConfigError("scene.noise_cell must be > 1");
  if (shape_count < 1) throw ConfigError("scene.shape_count must be >= 1");
  if (texture == TextureKind::photo && photo_path.empty()) throw ConfigError("scene.photo_path is required");
  const double reach = std::max(std::abs(velocity.x), std::abs(velocity.y)) * sim.duration;
  if (angular_velocity == 0.0 && reach > margin)
    throw ConfigError("scene.margin too small for the requested motion");
}

LogFrame make_texture(const SceneSpec& spec) {
  const int w = spec.sim.width + 2 * spec.margin, h = spec.sim.height + 2 * spec.margin;
  switch (spec.texture) {
    case TextureKind::checkerboard: return textures::checkerboard(w, h, spec.checker_square, spec.texture_options);
    case TextureKind::noise:
      return textures::value_noise(w, h, spec.noise_cell, spec.texture_seed, spec.texture_options);
    case TextureKind::shapes: return textures::shapes(w, h, spec.shape_count, spec.texture_seed, spec.texture_options);
    case TextureKind::photo: {
      const Frame f = load_frame(spec.photo_path);
      const ImageD img = (f.intensity.width() == w && f.intensity.height() == h)
                             ? f.intensity
                             : textures::resize(f.intensity, w, h);
      return textures::from_image(img, spec.texture_options);
    }
  }
  throw ConfigError("unknown texture");
}

MotionTrajectory make_trajectory(const SceneSpec& spec) {
  const double T = spec.sim.duration;
  const Vec2 offset{-static_cast<double>(spec.margin), -static_cast<double>(spec.margin)};
  if (spec.angular_velocity == 0.0) return MotionTrajectory::constant_velocity(offset, spec.velocity, T);
  // Rotation about the sensor centre, piecewise linear in small steps.
  const Vec2 c{(spec.sim.width - 1) / 2.0, (spec.sim.height - 1) / 2.0};
  std::vector<Keyframe> keys;
  const int n = std::max(1, static_cast<int>(std::ceil(T / 0.01)));
  for (int i = 0; i <= n; ++i) {
    const double t = T * i / n;
    const WarpSE2 shift{0.0, offset + t * spec.velocity};
    const WarpSE2 rot{spec.angular_velocity * t, c - WarpSE2{spec.angular_velocity * t, {}}.rotate(c)};
    const WarpSE2 pose = compose(rot, shift);
    keys.push_back({t, pose.theta, pose.t.x, pose.t.y});
  }
  if (T == 0.0) keys.resize(1);
  return MotionTrajectory(std::move(keys));
}

SceneData simulate_scene(const SceneSpec& spec) {
  spec.validate();
  SceneData s;
  s.texture = make_texture(spec);
  s.trajectory = make_trajectory(spec);
  s.events = simulate_events(s.texture, s.trajectory, spec.sim);
  for (LogFrame& f : render_frames(s.texture, s.trajectory, spec.sim))
    s.frames.push_back(quantize_8bit(f, spec.sim.log_eps));
  return s;
}

std::vector<PixelPos> detect_seeds(const SceneData& scene, const TrackerConfig& config) {
  if (scene.frames.empty()) return {};
  const GradientField grad = gradient(scene.frames.front());
  std::vector<PixelPos> out;
  for (const Corner& c : detect_features(scene.frames.front(), grad, config)) out.push_back(c.position);
  return out;
}

RunResult run_scene(const SceneData& scene, const SceneSpec& spec, const TrackerConfig& config, Method method,
                    std::span<const PixelPos> seeds) {
  RunResult r;
  r.seeds = seeds.empty() ? detect_seeds(scene, config) : std::vector<PixelPos>(seeds.begin(), seeds.end());
  const auto start = std::chrono::steady_clock::now();
  if (method == Method::proposed) {
    r.tracks = track_stream(scene.frames, scene.events, config, r.seeds);
  } else {
    icp::IcpTrackerConfig ic;
    ic.base = config;
    r.tracks = icp::track_stream(scene.frames, scene.events, ic, r.seeds);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  // Ground truth ids follow the seed order, as the trackers assign ids to
  // seeds that survive placement in order.
  std::vector<Vec2> pts;
  for (const FeatureTrack& tr : r.tracks) pts.push_back({tr.samples.front().x, tr.samples.front().y});
  r.ground_truth = ground_truth_tracks(pts, scene.trajectory, spec.gt_period, spec.sim);
  for (std::size_t i = 0; i < r.tracks.size(); ++i) r.ground_truth[i].id = r.tracks[i].id;
  r.summary = evaluate_tracks(r.tracks, r.ground_truth);
  return r;
}

std::vector<PixelPos> seeds_staying_inside(const SceneData& scene, const SceneSpec& spec,
                                           std::span<const PixelPos> seeds, int side) {
  std::vector<Vec2> pts;
  for (const PixelPos& p : seeds) pts.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
  const auto gt = ground_truth_tracks(pts, scene.trajectory, spec.gt_period, spec.sim);
  const double t_end = std::min(spec.sim.duration, scene.trajectory.end());
  std::vector<PixelPos> out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& s = gt[i].samples;
    bool inside = !s.empty() && s.back().t >= t_end - 0.5 * spec.gt_period;
    for (std::size_t k = 0; inside && k < s.size(); ++k)
      inside = PatchWindow{round_to_pixel({s[k].x, s[k].y}), side}.inside_sensor(spec.sim.width, spec.sim.height);
    if (inside) out.push_back(seeds[i]);
  }
  return out;
}

std::vector<SweepRow> patch_size_sweep(const SceneData& scene, const SceneSpec& spec, const TrackerConfig& base,
                                       std::span<const int> sizes, Method method) {
  if (sizes.empty()) return {};
  for (int p : sizes)
    if (p < 5 || p % 2 == 0) throw ConfigError("patch sizes must be odd and >= 5");
  TrackerConfig seed_cfg = base;
  seed_cfg.patch_size = *std::max_element(sizes.begin(), sizes.end());
  const std::vector<PixelPos> seeds =
      seeds_staying_inside(scene, spec, detect_seeds(scene, seed_cfg), seed_cfg.patch_size);
  std::vector<SweepRow> rows;
  for (int p : sizes) {
    TrackerConfig cfg = base;
    cfg.patch_size = p;
    const RunResult r = run_scene(scene, spec, cfg, method, seeds);
    rows.push_back({p, r.summary.mean_error_px, r.summary.mean_age_s, r.tracks.size()});
  }
  return rows;
}

}  // namespace evtrack
