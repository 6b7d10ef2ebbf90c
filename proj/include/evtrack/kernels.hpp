#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "evtrack/geometry.hpp"
#include "evtrack/image.hpp"

// Data-parallel inner loops shared by the simulator and the trackers. Every
// kernel has a scalar reference implementation; vectorised variants are
// selected at runtime from what the CPU supports and are tested for
// equivalence against the reference.
namespace evtrack::kernels {

enum class Backend { scalar, avx2, neon };

std::string_view name(Backend b);

// Regular lattice of sample positions p(i, j) = origin + i * col_step + j * row_step,
// i < cols, j < rows, stored row-major.
struct AffineLattice {
  Vec2 origin;
  Vec2 col_step{1.0, 0.0};
  Vec2 row_step{0.0, 1.0};
  int cols = 0;
  int rows = 0;

  std::size_t size() const { return static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows); }
  Vec2 at(int i, int j) const {
    return {origin.x + j * row_step.x + i * col_step.x, origin.y + j * row_step.y + i * col_step.y};
  }
  // True if every lattice point lies in [0, w-1] x [0, h-1]. The lattice is
  // the affine image of a rectangle, so checking its corners suffices.
  bool inside(int width, int height) const;
};

struct KernelTable {
  Backend backend;
  // out[k] = a * gx(p_k) + b * gy(p_k), bilinear. All points must be in the
  // domain of the (equally sized, >= 2x2) fields.
  void (*sample_gradient_dot)(const ImageD& gx, const ImageD& gy, const AffineLattice& lattice, double a,
                              double b, double* out);
  // out[k] = field(p_k) bilinear, or `fill` when p_k is outside the domain.
  void (*sample_fill)(const ImageD& field, const AffineLattice& lattice, double fill, double* out);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_abs)(const double* a, std::size_t n);
  // out = sa * a - sb * b
  void (*scaled_difference)(const double* a, double sa, const double* b, double sb, double* out,
                            std::size_t n);
};

std::vector<Backend> available_backends();
bool is_available(Backend b);
const KernelTable& table(Backend b);

// The process-wide backend. Initially the best available one, unless the
// EVTRACK_SIMD environment variable names another ("scalar", "avx2", "neon").
const KernelTable& active();
void set_backend(Backend b);  // throws ConfigError if unavailable

// Convenience wrappers over active().
void sample_gradient_dot(const GradientField& grad, const AffineLattice& lattice, Vec2 weights,
                         std::span<double> out);
void sample_fill(const ImageD& field, const AffineLattice& lattice, double fill, std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
double sum_squares(std::span<const double> a);
double sum_abs(std::span<const double> a);
void scaled_difference(std::span<const double> a, double sa, std::span<const double> b, double sb,
                       std::span<double> out);

}  // namespace evtrack::kernels
