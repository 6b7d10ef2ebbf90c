#include "evtrack/profile.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "evtrack/error.hpp"

namespace evtrack {

bool CostGrid::valid(int i, int j) const {
  return i >= 0 && j >= 0 && i < n && j < n && std::isfinite(at(i, j));
}

CostGrid cost_profile(const OffsetObjective& f, double half_range, double step) {
  if (!(step > 0.0) || !(half_range >= 0.0)) throw DomainError("cost_profile: need step > 0 and half_range >= 0");
  CostGrid g;
  g.half_range = half_range;
  g.step = step;
  g.n = static_cast<int>(std::lround(2.0 * half_range / step)) + 1;
  g.values.assign(static_cast<std::size_t>(g.n) * g.n, std::numeric_limits<double>::quiet_NaN());
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const std::optional<double> v = f({g.offset(i), g.offset(j)});
      if (v && std::isfinite(*v)) g.values[static_cast<std::size_t>(j) * g.n + i] = *v;
    }
  return g;
}

std::vector<GridCell> local_minima(const CostGrid& grid) {
  std::vector<GridCell> out;
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < grid.n; ++i) {
      if (!grid.valid(i, j)) continue;
      const double v = grid.at(i, j);
      bool is_min = true;
      for (int dy = -1; dy <= 1 && is_min; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx == 0 && dy == 0) || !grid.valid(i + dx, j + dy)) continue;
          if (!(v < grid.at(i + dx, j + dy))) {
            is_min = false;
            break;
          }
        }
      if (is_min) out.push_back({i, j});
    }
  return out;
}

GridCell argmin(const CostGrid& grid) {
  GridCell best{-1, -1};
  double bv = std::numeric_limits<double>::infinity();
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < grid.n; ++i)
      if (grid.valid(i, j) && grid.at(i, j) < bv) {
        bv = grid.at(i, j);
        best = {i, j};
      }
  if (best.i < 0) throw EmptyOverlapError("argmin: grid has no valid cell");
  return best;
}

void write_grid_csv(std::ostream& os, const CostGrid& grid) {
  char buf[64];
  os << "dy\\dx";
  for (int i = 0; i < grid.n; ++i) {
    std::snprintf(buf, sizeof buf, ",%.6g", grid.offset(i));
    os << buf;
  }
  os << '\n';
  for (int j = 0; j < grid.n; ++j) {
    std::snprintf(buf, sizeof buf, "%.6g", grid.offset(j));
    os << buf;
    for (int i = 0; i < grid.n; ++i) {
      if (grid.valid(i, j))
        std::snprintf(buf, sizeof buf, ",%.9g", grid.at(i, j));
      else
        std::snprintf(buf, sizeof buf, ",nan");
      os << buf;
    }
    os << '\n';
  }
}

CostGrid proposed_profile(const Registration& reg, const WarpSE2& center, FlowDirection flow, double half_range,
                          double step) {
  return cost_profile(
      [&](Vec2 d) -> std::optional<double> {
        try {
          return reg.cost({center.theta, center.t + d}, flow);
        } catch (const BoundsError&) {
          return std::nullopt;
        } catch (const DegeneratePatchError&) {
          return std::nullopt;
        }
      },
      half_range, step);
}

CostGrid baseline_profile(const icp::PointSet& data, const icp::PointSet& model, Vec2 anchor, const WarpSE2& center,
                          double half_range, double step, double gate) {
  return cost_profile(
      [&](Vec2 d) -> std::optional<double> {
        if (data.empty() || model.empty()) return std::nullopt;
        const WarpSE2 local{center.theta, center.t + d};
        const WarpSE2 absolute{local.theta, anchor + local.t - local.rotate(anchor)};
        return icp::alignment_cost(data, model, absolute.inverse(), gate);
      },
      half_range, step);
}

}  // namespace evtrack
