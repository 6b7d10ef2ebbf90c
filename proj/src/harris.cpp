#include "evtrack/harris.hpp"

#include <algorithm>
#include <cmath>

namespace evtrack {

ImageD harris_response(const GradientField& grad, double window_sigma, double k) {
  const int w = grad.width(), h = grad.height();
  ImageD xx(w, h), xy(w, h), yy(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = grad.dx(x, y), gy = grad.dy(x, y);
      xx(x, y) = gx * gx;
      xy(x, y) = gx * gy;
      yy(x, y) = gy * gy;
    }
  xx = gaussian_blur(xx, window_sigma);
  xy = gaussian_blur(xy, window_sigma);
  yy = gaussian_blur(yy, window_sigma);
  ImageD r(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double a = xx(x, y), b = xy(x, y), c = yy(x, y);
      r(x, y) = a * c - b * b - k * (a + c) * (a + c);
    }
  return r;
}

std::vector<Corner> detect_corners(const GradientField& grad, const HarrisConfig& config, int margin) {
  const ImageD r = harris_response(grad, config.window_sigma, config.k);
  const int w = r.width(), h = r.height();

  std::vector<double> sorted(r.values().begin(), r.values().end());
  const auto q = static_cast<std::size_t>(std::clamp(config.response_quantile, 0.0, 1.0) * (sorted.size() - 1));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(q), sorted.end());
  const double threshold = std::max(sorted[q], 0.0);

  std::vector<Corner> candidates;
  for (int y = std::max(margin, 1); y < std::min(h - margin, h - 1); ++y)
    for (int x = std::max(margin, 1); x < std::min(w - margin, w - 1); ++x) {
      const double v = r(x, y);
      if (!(v > threshold)) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (r(x + dx, y + dy) > v) {
            is_max = false;
            break;
          }
      if (is_max) candidates.push_back({{x, y}, v});
    }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Corner& a, const Corner& b) { return a.response > b.response; });

  std::vector<Corner> kept;
  const double r2 = static_cast<double>(config.nms_radius) * config.nms_radius;
  for (const Corner& c : candidates) {
    if (static_cast<int>(kept.size()) >= config.max_features) break;
    bool clear = true;
    for (const Corner& k : kept) {
      const double dx = c.position.x - k.position.x, dy = c.position.y - k.position.y;
      if (dx * dx + dy * dy <= r2) {
        clear = false;
        break;
      }
    }
    if (clear) kept.push_back(c);
  }
  return kept;
}

}  // namespace evtrack
