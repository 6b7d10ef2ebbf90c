#pragma once

#include <span>
#include <vector>

#include "evtrack/geometry.hpp"
#include "evtrack/track.hpp"

namespace evtrack {

struct TrackError {
  int id = 0;
  double mean_error = 0.0;  // pixels
  std::vector<double> times;
  std::vector<double> errors;
  double age = 0.0;  // seconds
};

// Estimated position at t by linear interpolation of the two bracketing
// samples. Requires samples.front().t <= t <= samples.back().t.
Vec2 interpolate_track(std::span<const TrackPoint> samples, double t);

// Errors at the GT times inside the estimated track's span. Throws
// ContractError for fewer than two estimated samples and EmptyOverlapError
// when no GT time falls inside the span.
TrackError tracking_error(const FeatureTrack& estimated, const GroundTruthTrack& gt);

struct SurvivalCurve {
  std::vector<double> times;
  std::vector<double> fraction;
  std::vector<double> mean_error;  // NaN where no survivor has an error yet
};

std::vector<double> uniform_grid(double t0, double t1, int count = 100);

// Initial tracks are the ones created at the earliest creation time. A
// track is active on [t_created, t_disposed), or for good if never disposed.
SurvivalCurve survival_curve(std::span<const FeatureTrack> tracks, std::span<const TrackError> errors,
                             std::span<const double> time_grid);

struct EvaluationSummary {
  double mean_error_px = 0.0;  // pooled over all evaluated samples
  double mean_age_s = 0.0;
  std::size_t tracks = 0;
  std::size_t evaluated = 0;  // tracks contributing errors
  std::size_t samples = 0;
  std::vector<TrackError> per_feature;
};

// Pairs tracks with GT by id (PairingError if a track has no GT). Tracks
// with fewer than two samples or no overlap count towards the age only.
EvaluationSummary evaluate_tracks(std::span<const FeatureTrack> tracks, std::span<const GroundTruthTrack> gt);

}  // namespace evtrack
