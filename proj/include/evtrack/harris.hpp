#pragma once

#include <vector>

#include "evtrack/image.hpp"
#include "evtrack/increment.hpp"

namespace evtrack {

struct HarrisConfig {
  double window_sigma = 2.0;
  double k = 0.04;
  // Candidates must exceed this quantile of the response over the image
  // (and be strictly positive).
  double response_quantile = 0.95;
  int nms_radius = 12;
  int max_features = 50;
};

struct Corner {
  PixelPos position;
  double response = 0.0;
};

// R = det(M) - k trace(M)^2 with M the Gaussian-windowed structure tensor.
ImageD harris_response(const GradientField& grad, double window_sigma, double k);

// Local maxima above threshold, greedy non-maximum suppression, `margin`
// border exclusion; sorted by descending response and truncated.
std::vector<Corner> detect_corners(const GradientField& grad, const HarrisConfig& config, int margin);

}  // namespace evtrack
