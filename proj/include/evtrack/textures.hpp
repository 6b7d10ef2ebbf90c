#pragma once

#include <cstdint>

#include "evtrack/image.hpp"

// Procedural scene textures for the simulator. All generators produce a
// linear intensity image in [lo, hi], optionally Gaussian-blurred, and return
// its log.
namespace evtrack::textures {

struct Options {
  double lo = 0.05;
  double hi = 0.95;
  double blur_sigma = 0.5;
  double log_eps = kDefaultLogEps;
};

LogFrame checkerboard(int width, int height, int square, const Options& opt = {});

// Smoothly interpolated random values on a coarse lattice of spacing `cell`.
LogFrame value_noise(int width, int height, double cell, std::uint64_t seed, const Options& opt = {});

// Random filled discs and rectangles on a plain background.
LogFrame shapes(int width, int height, int count, std::uint64_t seed, const Options& opt = {});

// Re-ranges an existing intensity image (e.g. a photograph) into [lo, hi].
LogFrame from_image(const ImageD& intensity, const Options& opt = {});

// Resamples `src` onto width x height with bilinear interpolation.
ImageD resize(const ImageD& src, int width, int height);

}  // namespace evtrack::textures
