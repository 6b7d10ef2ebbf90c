#include <algorithm>
#include <cmath>

#include "kernels_impl.hpp"

namespace evtrack::kernels::scalar {
namespace {

struct Cell {
  std::size_t i00;
  double fx, fy;
};

// Requires 0 <= x <= w-1, 0 <= y <= h-1 and w, h >= 2.
inline Cell locate(double x, double y, int w, int h) {
  const int x0 = std::min(static_cast<int>(std::floor(x)), w - 2);
  const int y0 = std::min(static_cast<int>(std::floor(y)), h - 2);
  return {static_cast<std::size_t>(y0) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x0), x - x0,
          y - y0};
}

inline double interpolate(const double* f, const Cell& c, std::size_t stride) {
  const double v00 = f[c.i00], v10 = f[c.i00 + 1];
  const double v01 = f[c.i00 + stride], v11 = f[c.i00 + stride + 1];
  const double top = v00 + c.fx * (v10 - v00);
  const double bot = v01 + c.fx * (v11 - v01);
  return top + c.fy * (bot - top);
}

void sample_gradient_dot(const ImageD& gx, const ImageD& gy, const AffineLattice& lat, double a, double b,
                         double* out) {
  const int w = gx.width(), h = gx.height();
  const std::size_t stride = static_cast<std::size_t>(w);
  for (int j = 0; j < lat.rows; ++j) {
    const double row_x = lat.origin.x + j * lat.row_step.x;
    const double row_y = lat.origin.y + j * lat.row_step.y;
    for (int i = 0; i < lat.cols; ++i) {
      const double x = row_x + i * lat.col_step.x;
      const double y = row_y + i * lat.col_step.y;
      const Cell c = locate(x, y, w, h);
      *out++ = a * interpolate(gx.data(), c, stride) + b * interpolate(gy.data(), c, stride);
    }
  }
}

void sample_fill(const ImageD& field, const AffineLattice& lat, double fill, double* out) {
  const int w = field.width(), h = field.height();
  const double xmax = w - 1, ymax = h - 1;
  const std::size_t stride = static_cast<std::size_t>(w);
  for (int j = 0; j < lat.rows; ++j) {
    const double row_x = lat.origin.x + j * lat.row_step.x;
    const double row_y = lat.origin.y + j * lat.row_step.y;
    for (int i = 0; i < lat.cols; ++i) {
      const double x = row_x + i * lat.col_step.x;
      const double y = row_y + i * lat.col_step.y;
      if (x >= 0.0 && y >= 0.0 && x <= xmax && y <= ymax)
        *out++ = interpolate(field.data(), locate(x, y, w, h), stride);
      else
        *out++ = fill;
    }
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_abs(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i]);
  return s;
}

void scaled_difference(const double* a, double sa, const double* b, double sb, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = sa * a[i] - sb * b[i];
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{Backend::scalar, sample_gradient_dot, sample_fill, dot, sum_abs, scaled_difference};
  return t;
}

}  // namespace evtrack::kernels::scalar
