#include "evtrack/textures.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "evtrack/error.hpp"

namespace evtrack::textures {
namespace {

LogFrame finish(ImageD img, const Options& opt) {
  img = gaussian_blur(img, opt.blur_sigma);
  double mn = img.values()[0], mx = mn;
  for (double v : img.values()) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  const double span = mx - mn;
  for (double& v : img.values()) v = span > 0.0 ? opt.lo + (opt.hi - opt.lo) * (v - mn) / span : 0.5 * (opt.lo + opt.hi);
  return to_log(Frame{0.0, std::move(img)}, opt.log_eps);
}

double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }

}  // namespace

LogFrame checkerboard(int width, int height, int square, const Options& opt) {
  if (square <= 0) throw DomainError("checkerboard: square size must be positive");
  ImageD img(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) img(x, y) = ((x / square + y / square) % 2) ? 1.0 : 0.0;
  return finish(std::move(img), opt);
}

LogFrame value_noise(int width, int height, double cell, std::uint64_t seed, const Options& opt) {
  if (!(cell > 0.0)) throw DomainError("value_noise: cell must be positive");
  const int gw = static_cast<int>(std::ceil(width / cell)) + 2;
  const int gh = static_cast<int>(std::ceil(height / cell)) + 2;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  ImageD lattice(gw, gh);
  for (double& v : lattice.values()) v = uni(rng);

  ImageD img(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double gx = x / cell, gy = y / cell;
      const int x0 = static_cast<int>(gx), y0 = static_cast<int>(gy);
      const double sx = smoothstep(gx - x0), sy = smoothstep(gy - y0);
      const double top = lattice(x0, y0) + sx * (lattice(x0 + 1, y0) - lattice(x0, y0));
      const double bot = lattice(x0, y0 + 1) + sx * (lattice(x0 + 1, y0 + 1) - lattice(x0, y0 + 1));
      img(x, y) = top + sy * (bot - top);
    }
  return finish(std::move(img), opt);
}

LogFrame shapes(int width, int height, int count, std::uint64_t seed, const Options& opt) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, width), uy(0.0, height), size(6.0, 22.0), coin(0.0, 1.0);
  ImageD img(width, height, 0.0);
  for (int s = 0; s < count; ++s) {
    const double cx = ux(rng), cy = uy(rng), r = size(rng);
    const bool disc = coin(rng) < 0.5;
    const double value = coin(rng) < 0.5 ? 1.0 : 0.0;
    const double hw = r, hh = size(rng);
    for (int y = std::max(0, static_cast<int>(cy - 2 * r)); y < std::min(height, static_cast<int>(cy + 2 * r) + 1); ++y)
      for (int x = std::max(0, static_cast<int>(cx - 2 * r)); x < std::min(width, static_cast<int>(cx + 2 * r) + 1); ++x) {
        const double dx = x - cx, dy = y - cy;
        const bool in = disc ? dx * dx + dy * dy <= r * r : std::abs(dx) <= hw && std::abs(dy) <= hh;
        if (in) img(x, y) = value;
      }
  }
  // Guarantee some contrast even for an unlucky draw.
  img(0, 0) = 1.0;
  return finish(std::move(img), opt);
}

LogFrame from_image(const ImageD& intensity, const Options& opt) { return finish(intensity, opt); }

ImageD resize(const ImageD& src, int width, int height) {
  ImageD out(width, height);
  const double sx = width > 1 ? (src.width() - 1.0) / (width - 1.0) : 0.0;
  const double sy = height > 1 ? (src.height() - 1.0) / (height - 1.0) : 0.0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) out(x, y) = sample_bilinear(src, {x * sx, y * sy});
  return out;
}

}  // namespace evtrack::textures
