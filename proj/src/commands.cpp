#include "evtrack/commands.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "evtrack/error.hpp"
#include "evtrack/eval.hpp"
#include "evtrack/profile.hpp"
#include "evtrack/track_io.hpp"

namespace evtrack {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const FormatError*>(&e))
    return kExitIo;
  if (dynamic_cast<const Error*>(&e)) return kExitData;
  return kExitUsage;
}

namespace {

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

void write_manifest(const RunConfig& config, const std::string& command, const std::vector<std::string>& outputs) {
  nlohmann::json m;
  m["command"] = command;
  m["config_hash"] = config_hash(config);
  m["outputs"] = outputs;
  m["config"] = nlohmann::json::parse(to_json(config));
  write_file_atomic(config.paths.out_dir / ("manifest_" + command + ".json"), m.dump(2) + "\n");
}

template <typename F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

struct Inputs {
  std::vector<LogFrame> frames;
  EventStream events;
  std::vector<PixelPos> seeds;
};

Inputs load_inputs(const RunConfig& config, const TrackerConfig& tracker) {
  Inputs in;
  for (const Frame& f : load_frames(config.paths.frames_or_default()))
    in.frames.push_back(to_log(f, config.scene.sim.log_eps));
  if (in.frames.empty()) throw ContractError("frame index lists no frames");
  const int w = in.frames.front().values.width(), h = in.frames.front().values.height();
  in.events = load_events(config.paths.events_or_default(), w, h);
  const fs::path seeds = config.paths.seeds_or_default();
  if (fs::exists(seeds)) {
    in.seeds = load_seeds(seeds);
  } else {
    const GradientField g = gradient(in.frames.front());
    for (const Corner& c : detect_features(in.frames.front(), g, tracker)) in.seeds.push_back(c.position);
  }
  return in;
}

}  // namespace

std::string format_seeds(const std::vector<PixelPos>& seeds) {
  std::string s = "id,x,y\n";
  for (std::size_t i = 0; i < seeds.size(); ++i)
    s += std::to_string(i) + "," + std::to_string(seeds[i].x) + "," + std::to_string(seeds[i].y) + "\n";
  return s;
}

std::vector<PixelPos> load_seeds(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open seeds " + path.string());
  std::vector<PixelPos> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    int id = 0;
    PixelPos p;
    if (std::sscanf(line.c_str(), "%d,%d,%d", &id, &p.x, &p.y) != 3) throw ParseError("expected id,x,y", line_no);
    if (id != static_cast<int>(out.size())) throw OrderingError("seed ids must be 0, 1, 2, ...", line_no);
    out.push_back(p);
  }
  return out;
}

void cmd_simulate(const RunConfig& config, std::ostream& log) {
  config.validate();
  prepare_out_dir(config.paths.out_dir);
  const fs::path& out = config.paths.out_dir;
  const SceneData scene = simulate_scene(config.scene);

  fs::create_directories(out / "frames");
  std::string index;
  std::vector<std::string> outputs{"events.txt", "frames.txt", "seeds.csv", "ground_truth.csv"};
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "frames/frame_%05zu.pgm", i);
    const std::vector<std::uint8_t> bytes = encode_pgm(to_intensity(scene.frames[i], config.scene.sim.log_eps).intensity);
    write_file_atomic(out / name, std::string(bytes.begin(), bytes.end()));
    index += shortest(scene.frames[i].t) + " " + name + "\n";
    outputs.push_back(name);
  }
  write_file_atomic(out / "frames.txt", index);
  write_file_atomic(out / "events.txt", render([&](std::ostream& os) { write_events(os, scene.events); }));

  const std::vector<PixelPos> seeds = detect_seeds(scene, config.tracker);
  write_file_atomic(out / "seeds.csv", format_seeds(seeds));
  std::vector<Vec2> pts;
  for (const PixelPos& p : seeds) pts.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
  const auto gt = ground_truth_tracks(pts, scene.trajectory, config.scene.gt_period, config.scene.sim);
  write_file_atomic(out / "ground_truth.csv", render([&](std::ostream& os) { write_tracks_csv(os, gt); }));
  write_manifest(config, "simulate", outputs);
  log << "simulated " << scene.events.events.size() << " events, " << scene.frames.size() << " frames, "
      << seeds.size() << " seeds\n";
}

void cmd_track(const RunConfig& config, std::ostream& log) {
  config.validate();
  prepare_out_dir(config.paths.out_dir);
  const Inputs in = load_inputs(config, config.tracker);
  std::vector<FeatureTrack> tracks;
  if (config.baseline) {
    icp::IcpTrackerConfig ic = config.baseline_options;
    ic.base = config.tracker;
    tracks = icp::track_stream(in.frames, in.events, ic, in.seeds);
  } else {
    tracks = track_stream(in.frames, in.events, config.tracker, in.seeds);
  }
  write_file_atomic(config.paths.tracks_or_default(), render([&](std::ostream& os) { write_tracks_csv(os, tracks); }));
  write_file_atomic(config.paths.disposal_or_default(),
                    render([&](std::ostream& os) { write_disposal_csv(os, tracks); }));
  write_manifest(config, "track", {"tracks.csv", "disposal.csv"});
  std::size_t active = 0;
  for (const FeatureTrack& t : tracks) active += t.reason == Disposal::active;
  log << "tracked " << tracks.size() << " features (" << active << " active at end)"
      << (config.baseline ? " [baseline]" : "") << "\n";
}

void cmd_evaluate(const RunConfig& config, std::ostream& log) {
  config.validate();
  prepare_out_dir(config.paths.out_dir);
  const auto tracks = load_feature_tracks(config.paths.tracks_or_default(), config.paths.disposal_or_default());
  const auto gt = load_tracks_csv(config.paths.ground_truth_or_default());
  const EvaluationSummary s = evaluate_tracks(tracks, gt);

  std::string errors = "id,mean_error_px,age_s,samples\n";
  for (const TrackError& e : s.per_feature) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%zu\n", e.id, e.mean_error, e.age, e.errors.size());
    errors += buf;
  }
  write_file_atomic(config.paths.out_dir / "errors.csv", errors);

  std::string survival = "t,fraction,mean_error_px\n";
  if (!tracks.empty()) {
    double t0 = tracks.front().t_created, t1 = t0;
    for (const FeatureTrack& t : tracks) {
      t0 = std::min(t0, t.t_created);
      t1 = std::max(t1, t.t_disposed);
    }
    for (const GroundTruthTrack& g : gt)
      if (!g.samples.empty()) t1 = std::max(t1, g.samples.back().t);
    const auto grid = uniform_grid(t0, t1, config.eval.survival_points);
    const SurvivalCurve c = survival_curve(tracks, s.per_feature, grid);
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", c.times[i], c.fraction[i], c.mean_error[i]);
      survival += buf;
    }
  }
  write_file_atomic(config.paths.out_dir / "survival.csv", survival);
  write_manifest(config, "evaluate", {"errors.csv", "survival.csv"});
  char line[128];
  std::snprintf(line, sizeof line, "mean_error_px=%.6f, mean_age_s=%.6f\n", s.mean_error_px, s.mean_age_s);
  log << line;
}

void cmd_profile(const RunConfig& config, std::ostream& log) {
  config.validate();
  prepare_out_dir(config.paths.out_dir);
  const ProfileConfig& pc = config.profile;
  CostGrid proposed, baseline;
  if (pc.self_test) {
    auto quad = [](Vec2 d) -> std::optional<double> { return d.x * d.x + d.y * d.y; };
    proposed = cost_profile(quad, pc.half_range, pc.step);
    baseline = proposed;
  } else {
    const Inputs in = load_inputs(config, config.tracker);
    std::optional<FeatureState> state;
    std::optional<OptimizeResult> result;
    Tracker tracker(config.tracker, in.frames.front().values.width(), in.frames.front().values.height());
    tracker.set_initial_corners(in.seeds);
    tracker.set_observer([&](const UpdateRecord& r) {
      if (r.feature_id == pc.feature_id && r.update_index == pc.update_index && !state) {
        state = *r.state;
        result = *r.result;
      }
    });
    tracker.add_frame(in.frames.front());
    for (const Event& e : in.events.events) {
      if (state) break;
      if (e.t >= in.frames.front().t) tracker.add_event(e);
    }
    if (!state)
      throw LookupError("feature " + std::to_string(pc.feature_id) + " has no update " +
                        std::to_string(pc.update_index));
    const int p = config.tracker.patch_size;
    const PatchWindow win = state->window(p);
    const Registration reg(state->templ, state->anchor, accumulate(state->buffer, win.center, p),
                           config.tracker.norm_tolerance);
    proposed = proposed_profile(reg, result->warp, result->flow, pc.half_range, pc.step);
    icp::PointSet data;
    for (const Event& e : state->buffer) data.push_back({static_cast<double>(e.x), static_cast<double>(e.y)});
    const icp::PointSet model =
        icp::canny_edges(in.frames.front(), round_to_pixel(state->anchor), p, config.baseline_options.canny);
    baseline = baseline_profile(data, model, state->anchor, result->warp, pc.half_range, pc.step,
                                config.baseline_options.icp.max_match_distance);
  }
  write_file_atomic(config.paths.out_dir / "profile_proposed.csv",
                    render([&](std::ostream& os) { write_grid_csv(os, proposed); }));
  write_file_atomic(config.paths.out_dir / "profile_baseline.csv",
                    render([&](std::ostream& os) { write_grid_csv(os, baseline); }));
  write_manifest(config, "profile", {"profile_proposed.csv", "profile_baseline.csv"});
  log << "profile minima: proposed " << local_minima(proposed).size() << ", baseline "
      << local_minima(baseline).size() << "\n";
}

void cmd_sweep(const RunConfig& config, std::ostream& log) {
  config.validate();
  prepare_out_dir(config.paths.out_dir);
  const SceneData scene = simulate_scene(config.scene);
  const auto rows = patch_size_sweep(scene, config.scene, config.tracker, config.sweep_sizes,
                                     config.baseline ? Method::icp : Method::proposed);
  std::string table = "patch_size,mean_error_px,mean_age_s,tracks\n";
  for (const SweepRow& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%zu\n", r.patch_size, r.mean_error_px, r.mean_age_s, r.tracks);
    table += buf;
    log << buf;
  }
  write_file_atomic(config.paths.out_dir / "sweep.csv", table);
  write_manifest(config, "sweep", {"sweep.csv"});
}

}  // namespace evtrack
