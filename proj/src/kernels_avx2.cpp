// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kernels_impl.hpp"

namespace evtrack::kernels::avx2 {
namespace {

struct Cells {
  __m128i i00;
  __m256d fx, fy;
};

// Same arithmetic as the scalar reference, four lanes at a time.
inline Cells locate(__m256d x, __m256d y, int w, int h) {
  const __m128i x0 = _mm_min_epi32(_mm256_cvttpd_epi32(_mm256_floor_pd(x)), _mm_set1_epi32(w - 2));
  const __m128i y0 = _mm_min_epi32(_mm256_cvttpd_epi32(_mm256_floor_pd(y)), _mm_set1_epi32(h - 2));
  Cells c;
  c.i00 = _mm_add_epi32(_mm_mullo_epi32(y0, _mm_set1_epi32(w)), x0);
  c.fx = _mm256_sub_pd(x, _mm256_cvtepi32_pd(x0));
  c.fy = _mm256_sub_pd(y, _mm256_cvtepi32_pd(y0));
  return c;
}

inline __m256d interpolate(const double* f, const Cells& c, int stride) {
  const __m256d v00 = _mm256_i32gather_pd(f, c.i00, 8);
  const __m256d v10 = _mm256_i32gather_pd(f + 1, c.i00, 8);
  const __m256d v01 = _mm256_i32gather_pd(f + stride, c.i00, 8);
  const __m256d v11 = _mm256_i32gather_pd(f + stride + 1, c.i00, 8);
  const __m256d top = _mm256_add_pd(v00, _mm256_mul_pd(c.fx, _mm256_sub_pd(v10, v00)));
  const __m256d bot = _mm256_add_pd(v01, _mm256_mul_pd(c.fx, _mm256_sub_pd(v11, v01)));
  return _mm256_add_pd(top, _mm256_mul_pd(c.fy, _mm256_sub_pd(bot, top)));
}

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

void sample_gradient_dot(const ImageD& gx, const ImageD& gy, const AffineLattice& lat, double a, double b,
                         double* out) {
  const int w = gx.width(), h = gx.height();
  const __m256d kLane = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  const __m256d va = _mm256_set1_pd(a), vb = _mm256_set1_pd(b);
  const __m256d cx = _mm256_set1_pd(lat.col_step.x), cy = _mm256_set1_pd(lat.col_step.y);
  for (int j = 0; j < lat.rows; ++j) {
    const double row_x = lat.origin.x + j * lat.row_step.x;
    const double row_y = lat.origin.y + j * lat.row_step.y;
    const __m256d rx = _mm256_set1_pd(row_x), ry = _mm256_set1_pd(row_y);
    int i = 0;
    for (; i + 4 <= lat.cols; i += 4) {
      const __m256d vi = _mm256_add_pd(_mm256_set1_pd(static_cast<double>(i)), kLane);
      const __m256d x = _mm256_add_pd(rx, _mm256_mul_pd(vi, cx));
      const __m256d y = _mm256_add_pd(ry, _mm256_mul_pd(vi, cy));
      const Cells c = locate(x, y, w, h);
      const __m256d sx = interpolate(gx.data(), c, w);
      const __m256d sy = interpolate(gy.data(), c, w);
      _mm256_storeu_pd(out, _mm256_add_pd(_mm256_mul_pd(va, sx), _mm256_mul_pd(vb, sy)));
      out += 4;
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
  const __m256d kLane = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d vxmax = _mm256_set1_pd(xmax), vymax = _mm256_set1_pd(ymax);
  const __m256d vfill = _mm256_set1_pd(fill);
  const __m256d cx = _mm256_set1_pd(lat.col_step.x), cy = _mm256_set1_pd(lat.col_step.y);
  for (int j = 0; j < lat.rows; ++j) {
    const double row_x = lat.origin.x + j * lat.row_step.x;
    const double row_y = lat.origin.y + j * lat.row_step.y;
    const __m256d rx = _mm256_set1_pd(row_x), ry = _mm256_set1_pd(row_y);
    int i = 0;
    for (; i + 4 <= lat.cols; i += 4) {
      const __m256d vi = _mm256_add_pd(_mm256_set1_pd(static_cast<double>(i)), kLane);
      const __m256d x = _mm256_add_pd(rx, _mm256_mul_pd(vi, cx));
      const __m256d y = _mm256_add_pd(ry, _mm256_mul_pd(vi, cy));
      const __m256d inside =
          _mm256_and_pd(_mm256_and_pd(_mm256_cmp_pd(x, zero, _CMP_GE_OQ), _mm256_cmp_pd(y, zero, _CMP_GE_OQ)),
                        _mm256_and_pd(_mm256_cmp_pd(x, vxmax, _CMP_LE_OQ), _mm256_cmp_pd(y, vymax, _CMP_LE_OQ)));
      if (_mm256_movemask_pd(inside) == 0) {
        _mm256_storeu_pd(out, vfill);
      } else {
        const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, zero), vxmax);
        const __m256d yc = _mm256_min_pd(_mm256_max_pd(y, zero), vymax);
        const __m256d v = interpolate(field.data(), locate(xc, yc, w, h), w);
        _mm256_storeu_pd(out, _mm256_blendv_pd(vfill, v, inside));
      }
      out += 4;
    }
    for (; i < lat.cols; ++i) {
      const double x = row_x + i * lat.col_step.x;
      const double y = row_y + i * lat.col_step.y;
      if (x >= 0.0 && y >= 0.0 && x <= xmax && y <= ymax)
        *out++ = interpolate_one(field.data(), x, y, w, h);
      else
        *out++ = fill;
    }
  }
}

inline double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_abs(const double* a, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign, _mm256_loadu_pd(a + i)));
  double s = horizontal_sum(acc);
  for (; i < n; ++i) s += std::abs(a[i]);
  return s;
}

void scaled_difference(const double* a, double sa, const double* b, double sb, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(sa), vb = _mm256_set1_pd(sb);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_mul_pd(va, _mm256_loadu_pd(a + i)),
                                            _mm256_mul_pd(vb, _mm256_loadu_pd(b + i))));
  for (; i < n; ++i) out[i] = sa * a[i] - sb * b[i];
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{Backend::avx2, sample_gradient_dot, sample_fill, dot, sum_abs, scaled_difference};
  return t;
}

}  // namespace evtrack::kernels::avx2
