#pragma once

#include <span>
#include <vector>

#include "evtrack/event.hpp"
#include "evtrack/geometry.hpp"
#include "evtrack/image.hpp"

namespace evtrack {

struct PixelPos {
  int x = 0;
  int y = 0;
  friend bool operator==(PixelPos, PixelPos) = default;
};

inline PixelPos round_to_pixel(Vec2 p) {
  return {static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
}

// Square window of side P (odd) centred on an integer pixel. Local index
// (i, j) in [0, P)^2 corresponds to sensor pixel center + (i - P/2, j - P/2).
struct PatchWindow {
  PixelPos center;
  int side = 25;

  int half() const { return (side - 1) / 2; }
  bool contains(int x, int y) const {
    return std::abs(x - center.x) <= half() && std::abs(y - center.y) <= half();
  }
  bool inside_sensor(int width, int height) const {
    return center.x - half() >= 0 && center.y - half() >= 0 && center.x + half() <= width - 1 &&
           center.y + half() <= height - 1;
  }
  std::size_t area() const { return static_cast<std::size_t>(side) * static_cast<std::size_t>(side); }
};

// Accumulated brightness increment, in units of the contrast threshold
// (i.e. signed event counts per pixel), row-major.
struct IncrementPatch {
  PatchWindow window;
  std::vector<double> values;
};

// Increment predicted from the frame gradient for a given warp and flow.
struct PredictedPatch {
  PatchWindow window;
  std::vector<double> values;
};

inline constexpr double kDefaultNormTolerance = 1e-6;

// Throws ContractError if an event lies outside the window.
IncrementPatch accumulate(std::span<const Event> events, PixelPos center, int side);

// value(d) = -grad L(W^-1(center + d)) . v expressed in sensor coordinates,
// where `template_to_sensor` maps frame (template) coordinates to the
// sensor. With the identity warp this is -grad L(center + d) . v. The flow
// need not be unit length. Throws BoundsError if any sample leaves the
// gradient field.
PredictedPatch predict(const GradientField& grad, const WarpSE2& template_to_sensor, Vec2 flow, PixelPos center,
                       int side);
void predict_into(const GradientField& grad, const WarpSE2& template_to_sensor, Vec2 flow, PixelPos center,
                  int side, std::span<double> out);

// Divides by the L2 norm; throws DegeneratePatchError if the norm is below
// `tolerance`.
std::vector<double> normalize(std::span<const double> values, double tolerance = kDefaultNormTolerance);

}  // namespace evtrack
