#include <atomic>
#include <cstdlib>
#include <string>

#include "evtrack/error.hpp"
#include "kernels_impl.hpp"

namespace evtrack::kernels {
namespace {

bool cpu_supports(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(EVTRACK_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#ifdef EVTRACK_HAVE_NEON
      return true;  // mandatory on AArch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("EVTRACK_SIMD")) {
    const std::string want(env);
    for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon})
      if (want == name(b) && cpu_supports(b)) return &table(b);
  }
  const auto all = available_backends();
  return &table(all.back());
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

std::string_view name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

bool AffineLattice::inside(int width, int height) const {
  if (cols <= 0 || rows <= 0) return true;
  const Vec2 corners[4] = {at(0, 0), at(cols - 1, 0), at(0, rows - 1), at(cols - 1, rows - 1)};
  for (const Vec2& c : corners)
    if (!(c.x >= 0.0 && c.y >= 0.0 && c.x <= width - 1 && c.y <= height - 1)) return false;
  return true;
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon})
    if (cpu_supports(b)) out.push_back(b);
  return out;
}

bool is_available(Backend b) { return cpu_supports(b); }

const KernelTable& table(Backend b) {
  if (!cpu_supports(b)) throw ConfigError("kernel backend '" + std::string(name(b)) + "' not available");
  switch (b) {
#ifdef EVTRACK_HAVE_AVX2
    case Backend::avx2:
      return avx2::table();
#endif
#ifdef EVTRACK_HAVE_NEON
    case Backend::neon:
      return neon::table();
#endif
    default:
      return scalar::table();
  }
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

void set_backend(Backend b) { active_slot().store(&table(b), std::memory_order_release); }

void sample_gradient_dot(const GradientField& grad, const AffineLattice& lattice, Vec2 weights,
                         std::span<double> out) {
  if (out.size() < lattice.size()) throw ContractError("sample_gradient_dot: output too small");
  if (grad.width() < 2 || grad.height() < 2 || !lattice.inside(grad.width(), grad.height()))
    throw BoundsError("sample_gradient_dot: lattice leaves the gradient field");
  active().sample_gradient_dot(grad.dx, grad.dy, lattice, weights.x, weights.y, out.data());
}

void sample_fill(const ImageD& field, const AffineLattice& lattice, double fill, std::span<double> out) {
  if (out.size() < lattice.size()) throw ContractError("sample_fill: output too small");
  if (field.width() < 2 || field.height() < 2) throw SizeError("sample_fill: field must be at least 2x2");
  active().sample_fill(field, lattice, fill, out.data());
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("dot: size mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const double> a) { return active().dot(a.data(), a.data(), a.size()); }

double sum_abs(std::span<const double> a) { return active().sum_abs(a.data(), a.size()); }

void scaled_difference(std::span<const double> a, double sa, std::span<const double> b, double sb,
                       std::span<double> out) {
  if (a.size() != b.size() || out.size() < a.size()) throw ContractError("scaled_difference: size mismatch");
  active().scaled_difference(a.data(), sa, b.data(), sb, out.data(), a.size());
}

}  // namespace evtrack::kernels
