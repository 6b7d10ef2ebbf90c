#include "evtrack/config.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "evtrack/error.hpp"

namespace evtrack {

using nlohmann::json;

namespace {

// Reads the keys of one JSON object into fields and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& field) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      field = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  void path(const char* key, std::filesystem::path& field) {
    std::string s = field.string();
    get(key, s);
    field = s;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string sub(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path_ + "." + it.key() + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// One visitor drives both parsing and serialisation so the two cannot drift.
template <typename Io>
void visit_sim(Io& io, SimConfig& s) {
  io.get("contrast_threshold", s.contrast_threshold);
  io.get("width", s.width);
  io.get("height", s.height);
  io.get("duration", s.duration);
  io.get("frame_period", s.frame_period);
  io.get("dt", s.dt);
  io.get("log_eps", s.log_eps);
  std::string interp = s.interpolation == Interpolation::cubic ? "cubic" : "bilinear";
  io.get("interpolation", interp);
  if (interp == "cubic")
    s.interpolation = Interpolation::cubic;
  else if (interp == "bilinear")
    s.interpolation = Interpolation::bilinear;
  else
    throw ConfigError("sim.interpolation must be \"bilinear\" or \"cubic\"");
  io.get("timestamp_jitter", s.timestamp_jitter);
  io.get("threshold_mismatch", s.threshold_mismatch);
  io.get("seed", s.seed);
}

template <typename Io>
void visit_scene(Io& io, SceneSpec& s) {
  std::string kind(to_string(s.texture));
  io.get("texture", kind);
  s.texture = texture_kind_from_string(kind);
  io.get("texture_seed", s.texture_seed);
  io.get("photo_path", s.photo_path);
  io.get("checker_square", s.checker_square);
  io.get("noise_cell", s.noise_cell);
  io.get("shape_count", s.shape_count);
  io.get("texture_lo", s.texture_options.lo);
  io.get("texture_hi", s.texture_options.hi);
  io.get("texture_blur", s.texture_options.blur_sigma);
  io.get("margin", s.margin);
  io.get("velocity_x", s.velocity.x);
  io.get("velocity_y", s.velocity.y);
  io.get("angular_velocity", s.angular_velocity);
  io.get("gt_period", s.gt_period);
}

template <typename Io>
void visit_tracker(Io& io, TrackerConfig& t) {
  io.get("patch_size", t.patch_size);
  io.get("loss_threshold", t.loss_threshold);
  io.get("min_events", t.min_events);
  io.get("max_events", t.max_events);
  io.get("contrast_estimate", t.contrast_estimate);
  io.get("norm_tolerance", t.norm_tolerance);
  io.get("redetect", t.redetect);
  io.get("harris_sigma", t.harris.window_sigma);
  io.get("harris_k", t.harris.k);
  io.get("harris_quantile", t.harris.response_quantile);
  io.get("harris_nms_radius", t.harris.nms_radius);
  io.get("harris_max_features", t.harris.max_features);
  io.get("lm_max_iterations", t.optimizer.max_iterations);
  io.get("lm_parameter_tolerance", t.optimizer.parameter_tolerance);
  io.get("lm_cost_tolerance", t.optimizer.cost_tolerance);
  io.get("lm_initial_damping", t.optimizer.initial_damping);
  io.get("lm_fd_step", t.optimizer.fd_step);
}

template <typename Io>
void visit_baseline(Io& io, icp::IcpTrackerConfig& b) {
  io.get("canny_sigma", b.canny.sigma);
  io.get("canny_high_quantile", b.canny.high_quantile);
  io.get("canny_low_ratio", b.canny.low_ratio);
  io.get("max_match_distance", b.icp.max_match_distance);
  io.get("max_iterations", b.icp.max_iterations);
  io.get("tolerance", b.icp.tolerance);
  io.get("min_inlier_ratio", b.min_inlier_ratio);
}

template <typename Io>
void visit_profile(Io& io, ProfileConfig& p) {
  io.get("feature_id", p.feature_id);
  io.get("update_index", p.update_index);
  io.get("half_range", p.half_range);
  io.get("step", p.step);
  io.get("self_test", p.self_test);
}

template <typename Io>
void visit_paths(Io& io, PathsConfig& p) {
  io.path("out_dir", p.out_dir);
  io.path("events", p.events);
  io.path("frames", p.frames);
  io.path("seeds", p.seeds);
  io.path("tracks", p.tracks);
  io.path("disposal", p.disposal);
  io.path("ground_truth", p.ground_truth);
}

class Writer {
 public:
  explicit Writer(json& j) : j_(j) { j_ = json::object(); }
  template <typename T>
  void get(const char* key, T& field) {
    j_[key] = field;
  }
  void path(const char* key, std::filesystem::path& field) { j_[key] = field.generic_string(); }

 private:
  json& j_;
};

template <typename F>
void read_section(Section& parent, const char* key, F&& visit) {
  if (const json* c = parent.child(key)) {
    Section s(*c, parent.sub(key));
    visit(s);
    s.finish();
  }
}

void check(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) throw ConfigError(field + ": " + rule);
}

}  // namespace

void RunConfig::validate() const {
  try {
    scene.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("scene/sim: ") + e.what());
  }
  try {
    tracker.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("tracker: ") + e.what());
  }
  const auto& b = baseline_options;
  check(b.canny.sigma > 0.0, "baseline.canny_sigma", "must be > 0");
  check(b.canny.high_quantile > 0.0 && b.canny.high_quantile < 1.0, "baseline.canny_high_quantile", "must be in (0, 1)");
  check(b.canny.low_ratio > 0.0 && b.canny.low_ratio <= 1.0, "baseline.canny_low_ratio", "must be in (0, 1]");
  check(b.icp.max_match_distance > 0.0, "baseline.max_match_distance", "must be > 0");
  check(b.icp.max_iterations >= 1, "baseline.max_iterations", "must be >= 1");
  check(b.min_inlier_ratio >= 0.0 && b.min_inlier_ratio <= 1.0, "baseline.min_inlier_ratio", "must be in [0, 1]");
  check(eval.survival_points >= 2, "eval.survival_points", "must be >= 2");
  check(profile.half_range > 0.0, "profile.half_range", "must be > 0");
  check(profile.step > 0.0, "profile.step", "must be > 0");
  const double cells = 2.0 * profile.half_range / profile.step;
  check(std::abs(cells - std::round(cells)) < 1e-9, "profile.step", "must divide 2 * half_range");
  check(profile.feature_id >= 0 && profile.update_index >= 0, "profile.feature_id/update_index", "must be >= 0");
  check(!sweep_sizes.empty(), "sweep.sizes", "must be nonempty");
  for (int p : sweep_sizes) check(p >= 5 && p % 2 == 1, "sweep.sizes", "entries must be odd and >= 5");
  check(!paths.out_dir.empty(), "paths.out_dir", "must be set");
}

RunConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section root(j, "config");
  read_section(root, "sim", [&](Section& s) { visit_sim(s, c.scene.sim); });
  read_section(root, "scene", [&](Section& s) { visit_scene(s, c.scene); });
  read_section(root, "tracker", [&](Section& s) { visit_tracker(s, c.tracker); });
  read_section(root, "baseline_options", [&](Section& s) { visit_baseline(s, c.baseline_options); });
  read_section(root, "eval", [&](Section& s) { s.get("survival_points", c.eval.survival_points); });
  read_section(root, "profile", [&](Section& s) { visit_profile(s, c.profile); });
  read_section(root, "sweep", [&](Section& s) { s.get("sizes", c.sweep_sizes); });
  read_section(root, "paths", [&](Section& s) { visit_paths(s, c.paths); });
  root.get("baseline", c.baseline);
  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const RunConfig& config) {
  RunConfig c = config;
  json j = json::object();
  auto section = [&](const char* key, auto&& visit) {
    json s;
    Writer w(s);
    visit(w);
    j[key] = s;
  };
  section("sim", [&](Writer& w) { visit_sim(w, c.scene.sim); });
  section("scene", [&](Writer& w) { visit_scene(w, c.scene); });
  section("tracker", [&](Writer& w) { visit_tracker(w, c.tracker); });
  section("baseline_options", [&](Writer& w) { visit_baseline(w, c.baseline_options); });
  section("eval", [&](Writer& w) { w.get("survival_points", c.eval.survival_points); });
  section("profile", [&](Writer& w) { visit_profile(w, c.profile); });
  section("sweep", [&](Writer& w) { w.get("sizes", c.sweep_sizes); });
  section("paths", [&](Writer& w) { visit_paths(w, c.paths); });
  j["baseline"] = c.baseline;
  return j.dump(2);
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : to_json(config)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void apply_seed(RunConfig& config, std::uint64_t seed) {
  config.scene.texture_seed = seed;
  config.scene.sim.seed = seed;
}

}  // namespace evtrack
