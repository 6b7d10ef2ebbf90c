#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "evtrack/geometry.hpp"
#include "evtrack/icp.hpp"
#include "evtrack/tracker.hpp"

namespace evtrack {

// Objective sampled on a square grid of translation offsets. Cells where the
// objective could not be evaluated hold NaN.
struct CostGrid {
  double half_range = 0.0;
  double step = 1.0;
  int n = 0;  // cells per side
  std::vector<double> values;

  double offset(int i) const { return -half_range + step * i; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * n + i]; }
  bool valid(int i, int j) const;
};

using OffsetObjective = std::function<std::optional<double>(Vec2 offset)>;

// Evaluates f on offsets {-h, -h + s, ..., h}^2, exact grid endpoints.
CostGrid cost_profile(const OffsetObjective& f, double half_range, double step);

struct GridCell {
  int i = 0;
  int j = 0;
};

// Valid cells strictly below every valid 8-neighbour.
std::vector<GridCell> local_minima(const CostGrid& grid);
GridCell argmin(const CostGrid& grid);

// Header row of x offsets, then one row per y offset; missing cells are
// written as "nan".
void write_grid_csv(std::ostream& os, const CostGrid& grid);

// Event-patch objective over translations of the local warp around
// `center`, with rotation and flow held fixed.
CostGrid proposed_profile(const Registration& reg, const WarpSE2& center, FlowDirection flow, double half_range,
                          double step);

// Point-set objective on the same parametrisation: sensor points `data`
// are mapped into the template by the inverse of the absolute warp.
CostGrid baseline_profile(const icp::PointSet& data, const icp::PointSet& model, Vec2 anchor, const WarpSE2& center,
                          double half_range, double step, double gate = 3.0);

}  // namespace evtrack
