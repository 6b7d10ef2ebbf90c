#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "evtrack/event.hpp"
#include "evtrack/geometry.hpp"
#include "evtrack/image.hpp"
#include "evtrack/increment.hpp"
#include "evtrack/track.hpp"
#include "evtrack/tracker.hpp"

// Point-set baseline: events are aligned to Canny edges of the frame around
// each feature by iterative closest point.
namespace evtrack::icp {

using PointSet = std::vector<Vec2>;

struct CannyConfig {
  double sigma = 1.0;
  double high_quantile = 0.9;  // of the window's gradient magnitudes
  double low_ratio = 0.4;      // low = low_ratio * high
};

// Edge pixels of a Canny detector run on the log frame, restricted to the
// side x side window around `center`. Image coordinates.
PointSet canny_edges(const LogFrame& frame, PixelPos center, int side, const CannyConfig& config = {});

struct Match {
  int data = 0;
  int model = 0;
  double weight = 1.0;
};

struct IcpOptions {
  double max_match_distance = 3.0;
  int max_iterations = 50;
  double tolerance = 1e-9;
};

struct IcpResult {
  WarpSE2 transform;  // data -> model
  std::vector<Match> matches;
  double cost = 0.0;  // sum of weighted squared residuals over matches
  int iterations = 0;
  std::vector<double> cost_history;  // after each rigid fit
  std::vector<WarpSE2> transform_history;
};

// Weighted least-squares rigid transform taking data[i] onto model[i].
WarpSE2 rigid_fit(std::span<const Vec2> data, std::span<const Vec2> model, std::span<const double> weights = {});

// Throws AlignmentError if no match survives the distance gate.
IcpResult icp_align(const PointSet& data, const PointSet& model, const WarpSE2& init, const IcpOptions& options = {});

// Mean over data points of min(d_nn^2, gate^2) after applying `transform`;
// unmatched points contribute the gate cost so the value is comparable
// across transforms. Used for cost profiles.
double alignment_cost(const PointSet& data, const PointSet& model, const WarpSE2& transform, double gate = 3.0);

struct IcpTrackerConfig {
  TrackerConfig base;  // patch size, budget rule, Harris settings
  CannyConfig canny;
  IcpOptions icp;
  double min_inlier_ratio = 0.5;
};

struct IcpUpdateRecord {
  int feature_id = 0;
  int update_index = 0;
  double t = 0.0;
  PointSet data;
  const PointSet* model = nullptr;
  WarpSE2 sensor_to_template;  // estimate before the update
};

// Same streaming contract as Tracker, with the ICP registration step.
class IcpTracker {
 public:
  using Observer = std::function<void(const IcpUpdateRecord&)>;

  IcpTracker(IcpTrackerConfig config, int width, int height);
  void set_initial_corners(std::vector<PixelPos> corners);
  void set_observer(Observer observer) { observer_ = std::move(observer); }
  void add_frame(const LogFrame& frame);
  void add_event(const Event& event);
  std::vector<FeatureTrack> finish(double t_end);

 private:
  struct Feature {
    Vec2 anchor;
    WarpSE2 template_to_sensor;
    PointSet model;
    std::vector<Event> buffer;
    int budget = 1;
    bool active = true;
    int updates = 0;
    Vec2 position() const { return template_to_sensor.apply(anchor); }
  };
  void update(std::size_t index, double t);

  IcpTrackerConfig config_;
  int width_;
  int height_;
  std::optional<std::vector<PixelPos>> initial_corners_;
  bool have_frame_ = false;
  std::vector<Feature> features_;
  std::vector<FeatureTrack> tracks_;
  Observer observer_;
};

std::vector<FeatureTrack> track_stream(std::span<const LogFrame> frames, const EventStream& events,
                                       const IcpTrackerConfig& config, std::span<const PixelPos> corners = {});

}  // namespace evtrack::icp
