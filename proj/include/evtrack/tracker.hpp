#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "evtrack/event.hpp"
#include "evtrack/geometry.hpp"
#include "evtrack/harris.hpp"
#include "evtrack/image.hpp"
#include "evtrack/increment.hpp"
#include "evtrack/lm.hpp"
#include "evtrack/track.hpp"

namespace evtrack {

struct TrackerConfig {
  int patch_size = 25;
  double loss_threshold = 1.6;
  int min_events = 15;
  int max_events = 0;  // 0 selects 5 * patch_size^2
  double contrast_estimate = 1.0;
  double norm_tolerance = kDefaultNormTolerance;
  HarrisConfig harris;
  LmOptions optimizer;
  bool redetect = false;

  int max_events_resolved() const { return max_events > 0 ? max_events : 5 * patch_size * patch_size; }
  void validate() const;  // throws ConfigError
};

enum class FeatureStatus { active, lost, exited };

// One tracked feature. The warp is expressed about the anchor: a template
// point u maps to anchor + R(theta) (u - anchor) + t, so the feature
// position is anchor + t.
struct FeatureState {
  int id = 0;
  Vec2 anchor;
  std::shared_ptr<const GradientField> templ;
  WarpSE2 warp;
  std::optional<FlowDirection> flow;
  std::vector<Event> buffer;
  int budget = 1;
  double last_cost = 0.0;
  FeatureStatus status = FeatureStatus::active;

  Vec2 position() const { return anchor + warp.t; }
  // Template -> sensor map for a local warp, in absolute coordinates.
  WarpSE2 absolute(const WarpSE2& local) const { return {local.theta, anchor + local.t - local.rotate(anchor)}; }
  PatchWindow window(int side) const { return {round_to_pixel(position()), side}; }
};

// Event side of the registration problem: the normalised accumulated patch
// over a fixed window, compared against predictions from the template.
class Registration {
 public:
  Registration(std::shared_ptr<const GradientField> templ, Vec2 anchor, const IncrementPatch& events,
               double norm_tolerance = kDefaultNormTolerance);

  // Residual n_events - n_predicted for (local warp, flow angle). Returns
  // false if the prediction leaves the template or is degenerate.
  bool residual(const WarpSE2& local, double flow_angle, std::span<double> out) const;
  // Squared norm of the residual, in [0, 4]. Throws BoundsError or
  // DegeneratePatchError.
  double cost(const WarpSE2& local, FlowDirection flow) const;

  const PatchWindow& window() const { return window_; }
  std::span<const double> normalized_events() const { return events_; }
  std::size_t size() const { return events_.size(); }

 private:
  std::shared_ptr<const GradientField> templ_;
  Vec2 anchor_;
  PatchWindow window_;
  std::vector<double> events_;
  double norm_tolerance_;
  mutable std::vector<double> scratch_;
};

struct OptimizeResult {
  WarpSE2 warp;
  FlowDirection flow;
  double cost = 0.0;
  int iterations = 0;
  bool degenerate = false;     // no usable flow direction / event patch
  bool out_of_bounds = false;  // prediction left the template at the start
};

// Sum over the window of |grad L(W^-1(x)) . v| (sensor gradient), units of C.
double expected_event_mass(const FeatureState& state, Vec2 flow_unit, int side);

FeatureState init_feature(int id, PixelPos corner, std::shared_ptr<const GradientField> templ,
                          const TrackerConfig& config);
// Appends the event if it falls in the current window; true once the buffer
// holds `budget` events.
bool ingest_event(FeatureState& state, const Event& event, const TrackerConfig& config);
double objective(const FeatureState& state, const WarpSE2& local, FlowDirection flow, const TrackerConfig& config);
OptimizeResult optimize(const FeatureState& state, const TrackerConfig& config);
// Same, against an externally supplied increment instead of the buffer.
OptimizeResult optimize(const FeatureState& state, const IncrementPatch& increment, const TrackerConfig& config);
// Applies the optimisation result: loss test, border test, commit. Returns
// the new status; on commit a sample is appended to `track`.
FeatureStatus finalize_update(FeatureState& state, const OptimizeResult& result, double t, FeatureTrack& track,
                              int width, int height, const TrackerConfig& config);
int update_event_budget(const FeatureState& state, const TrackerConfig& config);

// Corners at least patch_size from every border.
std::vector<Corner> detect_features(const LogFrame& frame, const GradientField& grad, const TrackerConfig& config);

struct UpdateRecord {
  int feature_id = 0;
  int update_index = 0;  // 0-based per feature
  double t = 0.0;
  const FeatureState* state = nullptr;  // before commit, buffer full
  const OptimizeResult* result = nullptr;
};

// Streaming front-end of the tracking loop: features are seeded from the
// first frame, events are routed to every window containing them and each
// feature updates on its own once its budget is full.
class Tracker {
 public:
  using Observer = std::function<void(const UpdateRecord&)>;

  Tracker(TrackerConfig config, int width, int height);

  // Use these corners instead of Harris detection on the first frame.
  void set_initial_corners(std::vector<PixelPos> corners);
  void set_observer(Observer observer) { observer_ = std::move(observer); }

  void add_frame(const LogFrame& frame);
  void add_event(const Event& event);
  // Closes still-active tracks at t_end and returns every track by id.
  std::vector<FeatureTrack> finish(double t_end);

  const std::vector<FeatureState>& features() const { return features_; }

 private:
  void spawn(const LogFrame& frame, const std::vector<PixelPos>& corners);
  void update(std::size_t index, double t);

  TrackerConfig config_;
  int width_;
  int height_;
  std::optional<std::vector<PixelPos>> initial_corners_;
  bool have_frame_ = false;
  std::vector<FeatureState> features_;
  std::vector<FeatureTrack> tracks_;
  std::vector<int> update_counts_;
  Observer observer_;
  int next_id_ = 0;
};

// Runs frames and events through a Tracker in time order.
std::vector<FeatureTrack> track_stream(std::span<const LogFrame> frames, const EventStream& events,
                                       const TrackerConfig& config, std::span<const PixelPos> corners = {});

}  // namespace evtrack
