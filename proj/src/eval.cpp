#include "evtrack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "evtrack/error.hpp"

namespace evtrack {

Vec2 interpolate_track(std::span<const TrackPoint> s, double t) {
  if (s.empty() || t < s.front().t || t > s.back().t) throw DomainError("interpolate_track: time outside the track");
  auto hi = std::lower_bound(s.begin(), s.end(), t, [](const TrackPoint& p, double v) { return p.t < v; });
  if (hi->t == t) return {hi->x, hi->y};
  auto lo = hi - 1;
  const double a = (t - lo->t) / (hi->t - lo->t);
  return {lo->x + a * (hi->x - lo->x), lo->y + a * (hi->y - lo->y)};
}

TrackError tracking_error(const FeatureTrack& est, const GroundTruthTrack& gt) {
  if (est.samples.size() < 2) throw ContractError("tracking_error: estimated track needs at least two samples");
  TrackError out;
  out.id = est.id;
  out.age = std::max(0.0, est.age());
  const double t0 = est.samples.front().t, t1 = est.samples.back().t;
  double sum = 0.0;
  for (const TrackPoint& g : gt.samples) {
    if (g.t < t0 || g.t > t1) continue;
    const Vec2 p = interpolate_track(est.samples, g.t);
    const double e = std::hypot(p.x - g.x, p.y - g.y);
    out.times.push_back(g.t);
    out.errors.push_back(e);
    sum += e;
  }
  if (out.errors.empty()) throw EmptyOverlapError("tracking_error: no GT sample inside the estimated span");
  out.mean_error = sum / static_cast<double>(out.errors.size());
  return out;
}

std::vector<double> uniform_grid(double t0, double t1, int count) {
  std::vector<double> g;
  if (count <= 0) return g;
  if (count == 1) return {t0};
  for (int i = 0; i < count; ++i) g.push_back(t0 + (t1 - t0) * i / (count - 1));
  return g;
}

SurvivalCurve survival_curve(std::span<const FeatureTrack> tracks, std::span<const TrackError> errors,
                             std::span<const double> time_grid) {
  if (tracks.empty()) throw ContractError("survival_curve: no tracks");
  double t_first = std::numeric_limits<double>::infinity();
  for (const FeatureTrack& tr : tracks) t_first = std::min(t_first, tr.t_created);
  std::vector<const FeatureTrack*> initial;
  for (const FeatureTrack& tr : tracks)
    if (tr.t_created == t_first) initial.push_back(&tr);
  std::map<int, const TrackError*> by_id;
  for (const TrackError& e : errors) by_id[e.id] = &e;

  SurvivalCurve c;
  for (double t : time_grid) {
    std::size_t alive = 0, with_error = 0;
    double sum = 0.0;
    for (const FeatureTrack* tr : initial) {
      const bool active = t >= tr->t_created && (tr->reason == Disposal::active || t < tr->t_disposed);
      if (!active) continue;
      ++alive;
      auto it = by_id.find(tr->id);
      if (it == by_id.end()) continue;
      const TrackError& e = *it->second;
      auto up = std::upper_bound(e.times.begin(), e.times.end(), t);
      if (up == e.times.begin()) continue;
      sum += e.errors[static_cast<std::size_t>(up - e.times.begin()) - 1];
      ++with_error;
    }
    c.times.push_back(t);
    c.fraction.push_back(static_cast<double>(alive) / static_cast<double>(initial.size()));
    c.mean_error.push_back(with_error ? sum / static_cast<double>(with_error)
                                      : std::numeric_limits<double>::quiet_NaN());
  }
  return c;
}

EvaluationSummary evaluate_tracks(std::span<const FeatureTrack> tracks, std::span<const GroundTruthTrack> gt) {
  std::map<int, const GroundTruthTrack*> by_id;
  for (const GroundTruthTrack& g : gt) by_id[g.id] = &g;
  EvaluationSummary s;
  s.tracks = tracks.size();
  double err_sum = 0.0, age_sum = 0.0;
  for (const FeatureTrack& tr : tracks) {
    auto it = by_id.find(tr.id);
    if (it == by_id.end()) throw PairingError("no ground truth for track id " + std::to_string(tr.id));
    age_sum += std::max(0.0, tr.age());
    if (tr.samples.size() < 2) continue;
    try {
      TrackError e = tracking_error(tr, *it->second);
      for (double v : e.errors) err_sum += v;
      s.samples += e.errors.size();
      ++s.evaluated;
      s.per_feature.push_back(std::move(e));
    } catch (const EmptyOverlapError&) {
    }
  }
  s.mean_error_px = s.samples ? err_sum / static_cast<double>(s.samples) : std::numeric_limits<double>::quiet_NaN();
  s.mean_age_s = s.tracks ? age_sum / static_cast<double>(s.tracks) : 0.0;
  return s;
}

}  // namespace evtrack
