#include "evtrack/icp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "evtrack/error.hpp"

namespace evtrack::icp {

PointSet canny_edges(const LogFrame& frame, PixelPos center, int side, const CannyConfig& config) {
  const ImageD& img = frame.values;
  const int half = (side - 1) / 2;
  if (center.x - half < 0 || center.y - half < 0 || center.x + half >= img.width() || center.y + half >= img.height())
    throw BoundsError("canny_edges: window outside the image");

  // Work on the window plus a margin so smoothing and gradients are not cut
  // at the window edge.
  const int margin = static_cast<int>(std::ceil(3.0 * config.sigma)) + 2;
  const int x0 = std::max(0, center.x - half - margin), y0 = std::max(0, center.y - half - margin);
  const int x1 = std::min(img.width() - 1, center.x + half + margin);
  const int y1 = std::min(img.height() - 1, center.y + half + margin);
  const int w = x1 - x0 + 1, h = y1 - y0 + 1;
  ImageD region(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) region(x, y) = img(x0 + x, y0 + y);
  region = gaussian_blur(region, config.sigma);

  ImageD gx(w, h), gy(w, h), mag(w, h);
  auto at = [&](int x, int y) { return region(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      gx(x, y) = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                 (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
      gy(x, y) = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                 (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
      mag(x, y) = std::hypot(gx(x, y), gy(x, y));
    }

  const int wx0 = center.x - half - x0, wy0 = center.y - half - y0;
  std::vector<double> window_mags;
  for (int y = wy0; y < wy0 + side; ++y)
    for (int x = wx0; x < wx0 + side; ++x) window_mags.push_back(mag(x, y));
  const auto q = static_cast<std::size_t>(std::clamp(config.high_quantile, 0.0, 1.0) * (window_mags.size() - 1));
  std::nth_element(window_mags.begin(), window_mags.begin() + static_cast<std::ptrdiff_t>(q), window_mags.end());
  const double high = window_mags[q];
  const double low = config.low_ratio * high;
  if (!(high > 1e-12)) return {};

  // Non-maximum suppression along the quantised gradient direction. The
  // comparison is strict on one side only so a symmetric ridge keeps exactly
  // one pixel.
  Grid<std::uint8_t> cls(side, side, 0);  // 0 none, 1 weak, 2 strong
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i) {
      const int x = wx0 + i, y = wy0 + j;
      const double m = mag(x, y);
      if (m < low || m <= 1e-12) continue;
      double angle = std::atan2(gy(x, y), gx(x, y)) * 180.0 / M_PI;
      if (angle < 0) angle += 180.0;
      int dx, dy;
      if (angle < 22.5 || angle >= 157.5) {
        dx = 1, dy = 0;
      } else if (angle < 67.5) {
        dx = 1, dy = 1;
      } else if (angle < 112.5) {
        dx = 0, dy = 1;
      } else {
        dx = -1, dy = 1;
      }
      auto m_at = [&](int xx, int yy) { return mag(std::clamp(xx, 0, w - 1), std::clamp(yy, 0, h - 1)); };
      const double before = m_at(x - dx, y - dy), after = m_at(x + dx, y + dy);
      if (!(m > before && m >= after)) continue;
      cls(i, j) = m >= high ? 2 : 1;
    }

  // Hysteresis: keep weak pixels 8-connected to a strong one.
  Grid<std::uint8_t> keep(side, side, 0);
  std::deque<PixelPos> queue;
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i)
      if (cls(i, j) == 2) {
        keep(i, j) = 1;
        queue.push_back({i, j});
      }
  while (!queue.empty()) {
    const PixelPos p = queue.front();
    queue.pop_front();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int i = p.x + dx, j = p.y + dy;
        if (i < 0 || j < 0 || i >= side || j >= side || keep(i, j) || cls(i, j) == 0) continue;
        keep(i, j) = 1;
        queue.push_back({i, j});
      }
  }

  PointSet out;
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i)
      if (keep(i, j)) out.push_back({static_cast<double>(center.x - half + i), static_cast<double>(center.y - half + j)});
  return out;
}

WarpSE2 rigid_fit(std::span<const Vec2> data, std::span<const Vec2> model, std::span<const double> weights) {
  if (data.size() != model.size() || data.empty()) throw ContractError("rigid_fit: need matching, nonempty sets");
  auto wt = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  double sw = 0.0;
  Vec2 cd{}, cm{};
  for (std::size_t i = 0; i < data.size(); ++i) {
    sw += wt(i);
    cd = cd + wt(i) * data[i];
    cm = cm + wt(i) * model[i];
  }
  if (!(sw > 0.0)) throw ContractError("rigid_fit: weights sum to zero");
  cd = (1.0 / sw) * cd;
  cm = (1.0 / sw) * cm;
  // Closed-form 2D Procrustes: theta maximises sum w <R a, b>.
  double s_dot = 0.0, s_cross = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vec2 a = data[i] - cd, b = model[i] - cm;
    s_dot += wt(i) * (a.x * b.x + a.y * b.y);
    s_cross += wt(i) * (a.x * b.y - a.y * b.x);
  }
  WarpSE2 r{std::atan2(s_cross, s_dot), {}};
  r.t = cm - r.rotate(cd);
  return r;
}

namespace {

struct Nearest {
  int index = -1;
  double d2 = std::numeric_limits<double>::infinity();
};

// Brute force; point sets here are a few hundred points at most.
Nearest nearest(const PointSet& model, Vec2 p) {
  Nearest best;
  for (std::size_t j = 0; j < model.size(); ++j) {
    const double dx = model[j].x - p.x, dy = model[j].y - p.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best.d2) best = {static_cast<int>(j), d2};
  }
  return best;
}

std::vector<Match> match(const PointSet& data, const PointSet& model, const WarpSE2& tf, double gate) {
  std::vector<Match> out;
  const double g2 = gate * gate;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Nearest n = nearest(model, tf.apply(data[i]));
    if (n.index >= 0 && n.d2 <= g2) out.push_back({static_cast<int>(i), n.index, 1.0});
  }
  return out;
}

double matched_cost(const PointSet& data, const PointSet& model, const std::vector<Match>& m, const WarpSE2& tf) {
  double s = 0.0;
  for (const Match& mm : m) {
    const Vec2 d = tf.apply(data[mm.data]) - model[mm.model];
    s += mm.weight * (d.x * d.x + d.y * d.y);
  }
  return s;
}

bool same_matches(const std::vector<Match>& a, const std::vector<Match>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].data != b[i].data || a[i].model != b[i].model) return false;
  return true;
}

}  // namespace

IcpResult icp_align(const PointSet& data, const PointSet& model, const WarpSE2& init, const IcpOptions& options) {
  if (data.empty() || model.empty()) throw AlignmentError("icp_align: empty point set");
  IcpResult res;
  res.transform = init;
  std::vector<Match> matches = match(data, model, init, options.max_match_distance);
  if (matches.empty()) throw AlignmentError("icp_align: no correspondences within the distance gate");

  for (int it = 1; it <= options.max_iterations; ++it) {
    res.iterations = it;
    std::vector<Vec2> d, m;
    std::vector<double> w;
    for (const Match& mm : matches) {
      d.push_back(data[mm.data]);
      m.push_back(model[mm.model]);
      w.push_back(mm.weight);
    }
    const WarpSE2 next = rigid_fit(d, m, w);
    const double cost = matched_cost(data, model, matches, next);
    const double dtheta = std::abs(next.theta - res.transform.theta);
    const double dt = norm(next.t - res.transform.t);
    res.transform = next;
    res.cost = cost;
    res.matches = matches;
    res.cost_history.push_back(cost);
    res.transform_history.push_back(next);

    std::vector<Match> rematched = match(data, model, next, options.max_match_distance);
    if (rematched.empty()) break;
    const bool stable = same_matches(rematched, matches);
    matches = std::move(rematched);
    if (stable && dtheta < options.tolerance && dt < options.tolerance) break;
    if (stable) continue;
  }
  return res;
}

double alignment_cost(const PointSet& data, const PointSet& model, const WarpSE2& transform, double gate) {
  if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double g2 = gate * gate;
  double s = 0.0;
  for (const Vec2& p : data) s += std::min(nearest(model, transform.apply(p)).d2, g2);
  return s / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Tracker

IcpTracker::IcpTracker(IcpTrackerConfig config, int width, int height)
    : config_(std::move(config)), width_(width), height_(height) {
  config_.base.validate();
}

void IcpTracker::set_initial_corners(std::vector<PixelPos> corners) { initial_corners_ = std::move(corners); }

void IcpTracker::add_frame(const LogFrame& frame) {
  if (have_frame_) return;
  have_frame_ = true;
  const int p = config_.base.patch_size;
  auto grad = std::make_shared<const GradientField>(gradient(frame));
  std::vector<PixelPos> corners;
  if (initial_corners_) {
    corners = *initial_corners_;
  } else {
    for (const Corner& c : detect_features(frame, *grad, config_.base)) corners.push_back(c.position);
  }
  int id = 0;
  for (const PixelPos& c : corners) {
    FeatureState seed;
    try {
      seed = init_feature(id, c, grad, config_.base);
    } catch (const PlacementError&) {
      continue;
    }
    Feature f;
    f.anchor = seed.anchor;
    f.budget = seed.budget;
    f.model = canny_edges(frame, c, p, config_.canny);
    FeatureTrack tr;
    tr.id = id++;
    tr.t_created = tr.t_disposed = frame.t;
    tr.samples.push_back({frame.t, f.anchor.x, f.anchor.y});
    if (f.model.empty()) {
      f.active = false;
      tr.reason = Disposal::lost;
    }
    features_.push_back(std::move(f));
    tracks_.push_back(std::move(tr));
  }
}

void IcpTracker::add_event(const Event& event) {
  if (!have_frame_) return;
  const int p = config_.base.patch_size;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    Feature& f = features_[i];
    if (!f.active) continue;
    const PatchWindow win{round_to_pixel(f.position()), p};
    if (!win.contains(event.x, event.y)) continue;
    f.buffer.push_back(event);
    if (static_cast<int>(f.buffer.size()) >= f.budget) update(i, event.t);
  }
}

void IcpTracker::update(std::size_t index, double t) {
  Feature& f = features_[index];
  FeatureTrack& tr = tracks_[index];
  PointSet data;
  data.reserve(f.buffer.size());
  for (const Event& e : f.buffer) data.push_back({static_cast<double>(e.x), static_cast<double>(e.y)});
  f.buffer.clear();
  const WarpSE2 init = f.template_to_sensor.inverse();
  if (observer_) observer_({tr.id, f.updates, t, data, &f.model, init});
  ++f.updates;

  auto dispose = [&](Disposal reason, double cost) {
    f.active = false;
    tr.reason = reason;
    tr.t_disposed = t;
    tr.final_cost = cost;
  };
  IcpResult res;
  try {
    res = icp_align(data, f.model, init, config_.icp);
  } catch (const AlignmentError&) {
    dispose(Disposal::lost, std::numeric_limits<double>::quiet_NaN());
    return;
  }
  const double mean_cost = res.matches.empty() ? 0.0 : res.cost / static_cast<double>(res.matches.size());
  const double inliers = static_cast<double>(res.matches.size()) / static_cast<double>(data.size());
  if (inliers < config_.min_inlier_ratio) {
    dispose(Disposal::lost, mean_cost);
    return;
  }
  const WarpSE2 next = res.transform.inverse();
  const PatchWindow win{round_to_pixel(next.apply(f.anchor)), config_.base.patch_size};
  if (!win.inside_sensor(width_, height_)) {
    dispose(Disposal::exited, mean_cost);
    return;
  }
  f.template_to_sensor = next;
  const Vec2 pos = f.position();
  if (!tr.samples.empty() && t <= tr.samples.back().t)
    tr.samples.back() = {tr.samples.back().t, pos.x, pos.y};
  else
    tr.samples.push_back({t, pos.x, pos.y});
  tr.final_cost = mean_cost;
}

std::vector<FeatureTrack> IcpTracker::finish(double t_end) {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (!features_[i].active) continue;
    tracks_[i].reason = Disposal::active;
    tracks_[i].t_disposed = std::max(t_end, tracks_[i].t_created);
  }
  return tracks_;
}

std::vector<FeatureTrack> track_stream(std::span<const LogFrame> frames, const EventStream& events,
                                       const IcpTrackerConfig& config, std::span<const PixelPos> corners) {
  if (frames.empty()) throw ContractError("track_stream: at least one frame is required");
  IcpTracker tracker(config, events.width > 0 ? events.width : frames.front().values.width(),
                     events.height > 0 ? events.height : frames.front().values.height());
  if (!corners.empty()) tracker.set_initial_corners({corners.begin(), corners.end()});
  tracker.add_frame(frames.front());
  double t_end = frames.back().t;
  for (const Event& e : events.events) {
    if (e.t < frames.front().t) continue;
    tracker.add_event(e);
    t_end = std::max(t_end, e.t);
  }
  return tracker.finish(t_end);
}

}  // namespace evtrack::icp
