#include "evtrack/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "evtrack/error.hpp"
#include "evtrack/kernels.hpp"

namespace evtrack {

void TrackerConfig::validate() const {
  if (patch_size < 5 || patch_size % 2 == 0) throw ConfigError("tracker.patch_size must be odd and >= 5");
  if (!(loss_threshold > 0.0)) throw ConfigError("tracker.loss_threshold must be > 0");
  if (min_events < 1) throw ConfigError("tracker.min_events must be >= 1");
  if (max_events != 0 && max_events < min_events) throw ConfigError("tracker.max_events must be >= min_events");
  if (!(contrast_estimate > 0.0)) throw ConfigError("tracker.contrast_estimate must be > 0");
  if (!(norm_tolerance > 0.0)) throw ConfigError("tracker.norm_tolerance must be > 0");
  if (!(harris.window_sigma > 0.0)) throw ConfigError("tracker.harris.window_sigma must be > 0");
  if (harris.response_quantile < 0.0 || harris.response_quantile > 1.0)
    throw ConfigError("tracker.harris.response_quantile must be in [0, 1]");
  if (harris.nms_radius < 0) throw ConfigError("tracker.harris.nms_radius must be >= 0");
  if (harris.max_features < 0) throw ConfigError("tracker.harris.max_features must be >= 0");
  if (optimizer.max_iterations < 1) throw ConfigError("tracker.optimizer.max_iterations must be >= 1");
  if (!(optimizer.parameter_tolerance > 0.0) || !(optimizer.cost_tolerance > 0.0))
    throw ConfigError("tracker.optimizer tolerances must be > 0");
  if (!(optimizer.initial_damping > 0.0)) throw ConfigError("tracker.optimizer.initial_damping must be > 0");
  if (!(optimizer.fd_step > 0.0)) throw ConfigError("tracker.optimizer.fd_step must be > 0");
}

// ---------------------------------------------------------------------------
// Registration

Registration::Registration(std::shared_ptr<const GradientField> templ, Vec2 anchor, const IncrementPatch& events,
                           double norm_tolerance)
    : templ_(std::move(templ)),
      anchor_(anchor),
      window_(events.window),
      events_(normalize(events.values, norm_tolerance)),
      norm_tolerance_(norm_tolerance),
      scratch_(events_.size()) {}

bool Registration::residual(const WarpSE2& local, double flow_angle, std::span<double> out) const {
  const WarpSE2 abs{local.theta, anchor_ + local.t - local.rotate(anchor_)};
  const Vec2 flow{std::cos(flow_angle), std::sin(flow_angle)};
  try {
    predict_into(*templ_, abs, flow, window_.center, window_.side, scratch_);
  } catch (const BoundsError&) {
    return false;
  }
  const double n = std::sqrt(kernels::sum_squares(scratch_));
  if (!(n >= norm_tolerance_)) return false;
  kernels::scaled_difference(events_, 1.0, scratch_, 1.0 / n, out);
  return true;
}

double Registration::cost(const WarpSE2& local, FlowDirection flow) const {
  const WarpSE2 abs{local.theta, anchor_ + local.t - local.rotate(anchor_)};
  predict_into(*templ_, abs, flow.unit(), window_.center, window_.side, scratch_);
  const std::vector<double> predicted = normalize(scratch_, norm_tolerance_);
  std::vector<double> diff(events_.size());
  kernels::scaled_difference(events_, 1.0, predicted, 1.0, diff);
  return kernels::sum_squares(diff);
}

// ---------------------------------------------------------------------------
// Per-feature operations

double expected_event_mass(const FeatureState& state, Vec2 flow_unit, int side) {
  const PatchWindow win = state.window(side);
  std::vector<double> pred(win.area());
  predict_into(*state.templ, state.absolute(state.warp), flow_unit, win.center, side, pred);
  return kernels::sum_abs(pred);
}

namespace {

int clamp_budget(double mass, const TrackerConfig& config) {
  const double n = std::round(mass / config.contrast_estimate);
  const double lo = config.min_events, hi = config.max_events_resolved();
  return static_cast<int>(std::clamp(n, lo, hi));
}

}  // namespace

FeatureState init_feature(int id, PixelPos corner, std::shared_ptr<const GradientField> templ,
                          const TrackerConfig& config) {
  const int p = config.patch_size;
  if (corner.x < p || corner.y < p || corner.x > templ->width() - 1 - p || corner.y > templ->height() - 1 - p)
    throw PlacementError("feature at (" + std::to_string(corner.x) + ", " + std::to_string(corner.y) +
                         ") is closer than the patch size to the border");
  FeatureState s;
  s.id = id;
  s.anchor = {static_cast<double>(corner.x), static_cast<double>(corner.y)};
  s.templ = std::move(templ);

  // Flow is unknown until the first update: take the median budget over
  // eight directions.
  std::vector<double> masses;
  for (int k = 0; k < 8; ++k) {
    const double a = k * M_PI / 4.0;
    masses.push_back(expected_event_mass(s, {std::cos(a), std::sin(a)}, p));
  }
  std::sort(masses.begin(), masses.end());
  s.budget = clamp_budget(0.5 * (masses[3] + masses[4]), config);
  return s;
}

bool ingest_event(FeatureState& state, const Event& event, const TrackerConfig& config) {
  if (state.status != FeatureStatus::active) return false;
  if (!state.window(config.patch_size).contains(event.x, event.y)) return false;
  state.buffer.push_back(event);
  return static_cast<int>(state.buffer.size()) >= state.budget;
}

double objective(const FeatureState& state, const WarpSE2& local, FlowDirection flow, const TrackerConfig& config) {
  const PatchWindow win = state.window(config.patch_size);
  const Registration reg(state.templ, state.anchor, accumulate(state.buffer, win.center, win.side),
                         config.norm_tolerance);
  return reg.cost(local, flow);
}

OptimizeResult optimize(const FeatureState& state, const TrackerConfig& config) {
  const PatchWindow win = state.window(config.patch_size);
  return optimize(state, accumulate(state.buffer, win.center, win.side), config);
}

OptimizeResult optimize(const FeatureState& state, const IncrementPatch& increment, const TrackerConfig& config) {
  OptimizeResult result;
  result.warp = state.warp;
  result.flow = state.flow.value_or(FlowDirection{});

  std::optional<Registration> reg;
  try {
    reg.emplace(state.templ, state.anchor, increment, config.norm_tolerance);
  } catch (const DegeneratePatchError&) {
    result.degenerate = true;
    return result;
  }

  std::vector<double> r(reg->size());
  double angle = result.flow.angle();
  if (!state.flow) {
    double best = std::numeric_limits<double>::infinity();
    bool any_bounds = false;
    for (int k = 0; k < 8; ++k) {
      const double a = k * M_PI / 4.0;
      try {
        const double c = reg->cost(state.warp, FlowDirection(a));
        if (c < best) {
          best = c;
          angle = a;
        }
      } catch (const BoundsError&) {
        any_bounds = true;
      } catch (const DegeneratePatchError&) {
      }
    }
    if (!std::isfinite(best)) {
      (any_bounds ? result.out_of_bounds : result.degenerate) = true;
      return result;
    }
  }

  auto f = [&](const Eigen::Vector4d& x, std::vector<double>& out) {
    return reg->residual({x[0], {x[1], x[2]}}, x[3], out);
  };
  const Eigen::Vector4d x0(state.warp.theta, state.warp.t.x, state.warp.t.y, angle);
  if (!f(x0, r)) {
    // Only reachable with a known flow: the warm start itself is unusable.
    try {
      (void)reg->cost(state.warp, FlowDirection(angle));
      result.degenerate = true;
    } catch (const BoundsError&) {
      result.out_of_bounds = true;
    } catch (const DegeneratePatchError&) {
      result.degenerate = true;
    }
    return result;
  }
  const auto summary = levenberg_marquardt<4>(f, x0, reg->size(), config.optimizer);
  result.warp = {summary.x[0], {summary.x[1], summary.x[2]}};
  result.flow = FlowDirection(summary.x[3]);
  result.cost = summary.cost;
  result.iterations = summary.iterations;
  return result;
}

int update_event_budget(const FeatureState& state, const TrackerConfig& config) {
  if (!state.flow) throw ContractError("update_event_budget: flow direction not yet estimated");
  try {
    return clamp_budget(expected_event_mass(state, state.flow->unit(), config.patch_size), config);
  } catch (const BoundsError&) {
    return config.min_events;
  }
}

FeatureStatus finalize_update(FeatureState& state, const OptimizeResult& result, double t, FeatureTrack& track,
                              int width, int height, const TrackerConfig& config) {
  auto dispose = [&](FeatureStatus status, Disposal reason) {
    state.status = status;
    state.last_cost = result.cost;
    state.buffer.clear();
    track.reason = reason;
    track.t_disposed = t;
    track.final_cost = result.cost;
    return status;
  };
  if (result.degenerate || result.cost > config.loss_threshold) return dispose(FeatureStatus::lost, Disposal::lost);
  if (result.out_of_bounds) return dispose(FeatureStatus::exited, Disposal::exited);
  const PatchWindow next{round_to_pixel(state.anchor + result.warp.t), config.patch_size};
  if (!next.inside_sensor(width, height)) return dispose(FeatureStatus::exited, Disposal::exited);

  state.warp = result.warp;
  state.flow = result.flow;
  state.last_cost = result.cost;
  state.buffer.clear();
  const Vec2 p = state.position();
  if (!track.samples.empty() && t <= track.samples.back().t)
    track.samples.back() = {track.samples.back().t, p.x, p.y};
  else
    track.samples.push_back({t, p.x, p.y});
  track.final_cost = result.cost;
  state.budget = update_event_budget(state, config);
  return FeatureStatus::active;
}

std::vector<Corner> detect_features(const LogFrame& frame, const GradientField& grad, const TrackerConfig& config) {
  const int p = config.patch_size;
  if (frame.values.width() < 3 * p || frame.values.height() < 3 * p)
    throw SizeError("detect_features: frame must be at least 3P x 3P");
  return detect_corners(grad, config.harris, p);
}

// ---------------------------------------------------------------------------
// Tracker

Tracker::Tracker(TrackerConfig config, int width, int height)
    : config_(std::move(config)), width_(width), height_(height) {
  config_.validate();
}

void Tracker::set_initial_corners(std::vector<PixelPos> corners) { initial_corners_ = std::move(corners); }

void Tracker::spawn(const LogFrame& frame, const std::vector<PixelPos>& corners) {
  auto templ = std::make_shared<const GradientField>(gradient(frame));
  for (const PixelPos& c : corners) {
    FeatureState state;
    try {
      state = init_feature(next_id_, c, templ, config_);
    } catch (const PlacementError&) {
      continue;
    }
    FeatureTrack track;
    track.id = next_id_;
    track.t_created = frame.t;
    track.t_disposed = frame.t;
    track.samples.push_back({frame.t, state.anchor.x, state.anchor.y});
    features_.push_back(std::move(state));
    tracks_.push_back(std::move(track));
    update_counts_.push_back(0);
    ++next_id_;
  }
}

void Tracker::add_frame(const LogFrame& frame) {
  if (frame.values.width() != width_ || frame.values.height() != height_)
    throw SizeError("tracker: frame size does not match the sensor");
  if (!have_frame_) {
    have_frame_ = true;
    std::vector<PixelPos> corners;
    if (initial_corners_) {
      corners = *initial_corners_;
    } else {
      const GradientField grad = gradient(frame);
      for (const Corner& c : detect_features(frame, grad, config_)) corners.push_back(c.position);
    }
    spawn(frame, corners);
    return;
  }
  if (!config_.redetect) return;
  const GradientField grad = gradient(frame);
  std::vector<PixelPos> fresh;
  const double min_dist = config_.patch_size;
  for (const Corner& c : detect_features(frame, grad, config_)) {
    bool free = true;
    for (const FeatureState& f : features_) {
      if (f.status != FeatureStatus::active) continue;
      const Vec2 d = f.position() - Vec2{static_cast<double>(c.position.x), static_cast<double>(c.position.y)};
      if (norm(d) < min_dist) {
        free = false;
        break;
      }
    }
    if (free) fresh.push_back(c.position);
  }
  spawn(frame, fresh);
}

void Tracker::update(std::size_t index, double t) {
  FeatureState& state = features_[index];
  const OptimizeResult result = optimize(state, config_);
  if (observer_) observer_({state.id, update_counts_[index], t, &state, &result});
  ++update_counts_[index];
  finalize_update(state, result, t, tracks_[index], width_, height_, config_);
}

void Tracker::add_event(const Event& event) {
  if (!have_frame_) return;
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (ingest_event(features_[i], event, config_)) update(i, event.t);
}

std::vector<FeatureTrack> Tracker::finish(double t_end) {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].status != FeatureStatus::active) continue;
    tracks_[i].reason = Disposal::active;
    tracks_[i].t_disposed = std::max(t_end, tracks_[i].t_created);
    tracks_[i].final_cost = features_[i].last_cost;
  }
  return tracks_;
}

std::vector<FeatureTrack> track_stream(std::span<const LogFrame> frames, const EventStream& events,
                                       const TrackerConfig& config, std::span<const PixelPos> corners) {
  if (frames.empty()) throw ContractError("track_stream: at least one frame is required");
  Tracker tracker(config, events.width > 0 ? events.width : frames.front().values.width(),
                  events.height > 0 ? events.height : frames.front().values.height());
  if (!corners.empty()) tracker.set_initial_corners({corners.begin(), corners.end()});

  std::size_t next_frame = 0;
  double t_end = frames.front().t;
  tracker.add_frame(frames[next_frame++]);
  for (const Event& e : events.events) {
    while (next_frame < frames.size() && frames[next_frame].t <= e.t) tracker.add_frame(frames[next_frame++]);
    if (e.t < frames.front().t) continue;
    tracker.add_event(e);
    t_end = std::max(t_end, e.t);
  }
  for (; next_frame < frames.size(); ++next_frame) {
    tracker.add_frame(frames[next_frame]);
    t_end = std::max(t_end, frames[next_frame].t);
  }
  return tracker.finish(t_end);
}

}  // namespace evtrack
