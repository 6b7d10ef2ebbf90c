#include "evtrack/increment.hpp"

#include <cmath>
#include <string>

#include "evtrack/error.hpp"
#include "evtrack/kernels.hpp"

namespace evtrack {

IncrementPatch accumulate(std::span<const Event> events, PixelPos center, int side) {
  if (side <= 0 || side % 2 == 0) throw ContractError("accumulate: patch side must be odd and positive");
  IncrementPatch patch{{center, side}, std::vector<double>(static_cast<std::size_t>(side) * side, 0.0)};
  const int half = patch.window.half();
  for (const Event& e : events) {
    const int i = e.x - center.x + half;
    const int j = e.y - center.y + half;
    if (i < 0 || j < 0 || i >= side || j >= side)
      throw ContractError("accumulate: event (" + std::to_string(e.x) + ", " + std::to_string(e.y) +
                          ") outside the patch window");
    patch.values[static_cast<std::size_t>(j) * side + i] += e.polarity;
  }
  return patch;
}

void predict_into(const GradientField& grad, const WarpSE2& template_to_sensor, Vec2 flow, PixelPos center,
                  int side, std::span<double> out) {
  const int half = (side - 1) / 2;
  kernels::AffineLattice lat;
  lat.origin = template_to_sensor.apply_inverse({static_cast<double>(center.x - half), static_cast<double>(center.y - half)});
  lat.col_step = template_to_sensor.rotate_inverse({1.0, 0.0});
  lat.row_step = template_to_sensor.rotate_inverse({0.0, 1.0});
  lat.cols = side;
  lat.rows = side;
  // The sensor-side gradient is R * grad, so (R grad) . v = grad . (R^T v).
  const Vec2 weights = -template_to_sensor.rotate_inverse(flow);
  kernels::sample_gradient_dot(grad, lat, weights, out);
}

PredictedPatch predict(const GradientField& grad, const WarpSE2& template_to_sensor, Vec2 flow, PixelPos center,
                       int side) {
  if (side <= 0 || side % 2 == 0) throw ContractError("predict: patch side must be odd and positive");
  PredictedPatch patch{{center, side}, std::vector<double>(static_cast<std::size_t>(side) * side)};
  predict_into(grad, template_to_sensor, flow, center, side, patch.values);
  return patch;
}

std::vector<double> normalize(std::span<const double> values, double tolerance) {
  const double n = std::sqrt(kernels::sum_squares(values));
  if (!(n >= tolerance)) throw DegeneratePatchError("normalize: patch norm " + std::to_string(n) + " below tolerance");
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) v /= n;
  return out;
}

}  // namespace evtrack
