// AArch64 Advanced SIMD variant, two double lanes per vector. No gather is
// available, so corner loads are per lane; the arithmetic is vectorised.

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

#include "kernels_impl.hpp"

namespace evtrack::kernels::neon {
namespace {

inline double interpolate_one(const double* f, double x, double y, int w, int h) {
  const int x0 = std::min(static_cast<int>(std::floor(x)), w - 2);
  const int y0 = std::min(static_cast<int>(std::floor(y)), h - 2);
  const std::size_t i00 = static_cast<std::size_t>(y0) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x0);
  const double fx = x - x0, fy = y - y0;
  const double v00 = f[i00], v10 = f[i00 + 1], v01 = f[i00 + w], v11 = f[i00 + w + 1];
  const double top = v00 + fx * (v10 - v00);
  const double bot = v01 + fx * (v11 - v01);
  return top + fy * (bot - top);
}

struct Cells {
  std::size_t i00[2];
  float64x2_t fx, fy;
};

inline Cells locate(float64x2_t x, float64x2_t y, int w, int h) {
  const float64x2_t xf = vrndmq_f64(x), yf = vrndmq_f64(y);
  const double xl[2] = {std::min(vgetq_lane_f64(xf, 0), w - 2.0), std::min(vgetq_lane_f64(xf, 1), w - 2.0)};
  const double yl[2] = {std::min(vgetq_lane_f64(yf, 0), h - 2.0), std::min(vgetq_lane_f64(yf, 1), h - 2.0)};
  Cells c;
  for (int k = 0; k < 2; ++k)
    c.i00[k] = static_cast<std::size_t>(yl[k]) * static_cast<std::size_t>(w) + static_cast<std::size_t>(xl[k]);
  c.fx = vsubq_f64(x, vld1q_f64(xl));
  c.fy = vsubq_f64(y, vld1q_f64(yl));
  return c;
}

inline float64x2_t gather(const double* f, const std::size_t idx[2]) {
  const double v[2] = {f[idx[0]], f[idx[1]]};
  return vld1q_f64(v);
}

inline float64x2_t interpolate(const double* f, const Cells& c, int stride) {
  const float64x2_t v00 = gather(f, c.i00);
  const float64x2_t v10 = gather(f + 1, c.i00);
  const float64x2_t v01 = gather(f + stride, c.i00);
  const float64x2_t v11 = gather(f + stride + 1, c.i00);
  const float64x2_t top = vaddq_f64(v00, vmulq_f64(c.fx, vsubq_f64(v10, v00)));
  const float64x2_t bot = vaddq_f64(v01, vmulq_f64(c.fx, vsubq_f64(v11, v01)));
  return vaddq_f64(top, vmulq_f64(c.fy, vsubq_f64(bot, top)));
}

void sample_gradient_dot(const ImageD& gx, const ImageD& gy, const AffineLattice& lat, double a, double b,
                         double* out) {
  const int w = gx.width(), h = gx.height();
  const double lane_init[2] = {0.0, 1.0};
  const float64x2_t lane = vld1q_f64(lane_init);
  const float64x2_t va = vdupq_n_f64(a), vb = vdupq_n_f64(b);
  const float64x2_t cx = vdupq_n_f64(lat.col_step.x), cy = vdupq_n_f64(lat.col_step.y);
  for (int j = 0; j < lat.rows; ++j) {
    const double row_x = lat.origin.x + j * lat.row_step.x;
    const double row_y = lat.origin.y + j * lat.row_step.y;
    const float64x2_t rx = vdupq_n_f64(row_x), ry = vdupq_n_f64(row_y);
    int i = 0;
    for (; i + 2 <= lat.cols; i += 2) {
      const float64x2_t vi = vaddq_f64(vdupq_n_f64(static_cast<double>(i)), lane);
      const float64x2_t x = vaddq_f64(rx, vmulq_f64(vi, cx));
      const float64x2_t y = vaddq_f64(ry, vmulq_f64(vi, cy));
      const Cells c = locate(x, y, w, h);
      const float64x2_t sx = interpolate(gx.data(), c, w);
      const float64x2_t sy = interpolate(gy.data(), c, w);
      vst1q_f64(out, vaddq_f64(vmulq_f64(va, sx), vmulq_f64(vb, sy)));
      out += 2;
    }
    for (; i < lat.cols; ++i) {
      const double x = row_x + i * lat.col_step.x;
      const double y = row_y + i * lat.col_step.y;
      *out++ = a * interpolate_one(gx.data(), x, y, w, h) + b * interpolate_one(gy.data(), x, y, w, h);
    }
  }
}

void sample_fill(const ImageD& field, const AffineLattice& lat, double fill, double* out) {
  const int w = field.width(), h = field.height();
  const double xmax = w - 1, ymax = h - 1;
  for (int j = 0; j < lat.rows; ++j) {
    const double row_x = lat.origin.x + j * lat.row_step.x;
    const double row_y = lat.origin.y + j * lat.row_step.y;
    for (int i = 0; i < lat.cols; ++i) {
      const double x = row_x + i * lat.col_step.x;
      const double y = row_y + i * lat.col_step.y;
      if (x >= 0.0 && y >= 0.0 && x <= xmax && y <= ymax)
        *out++ = interpolate_one(field.data(), x, y, w, h);
      else
        *out++ = fill;
    }
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_abs(const double* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vabsq_f64(vld1q_f64(a + i)));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += std::abs(a[i]);
  return s;
}

void scaled_difference(const double* a, double sa, const double* b, double sb, double* out, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(sa), vb = vdupq_n_f64(sb);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vsubq_f64(vmulq_f64(va, vld1q_f64(a + i)), vmulq_f64(vb, vld1q_f64(b + i))));
  for (; i < n; ++i) out[i] = sa * a[i] - sb * b[i];
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{Backend::neon, sample_gradient_dot, sample_fill, dot, sum_abs, scaled_difference};
  return t;
}

}  // namespace evtrack::kernels::neon
