#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "evtrack/geometry.hpp"

namespace evtrack {

// Row-major 2D grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<T> row(int y) { return {data_.data() + index(0, y), static_cast<std::size_t>(width_)}; }
  std::span<const T> row(int y) const {
    return {data_.data() + index(0, y), static_cast<std::size_t>(width_)};
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  const T* data() const { return data_.data(); }
  T* data() { return data_.data(); }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ImageD = Grid<double>;

// Linear intensity image, values in [0, 1].
struct Frame {
  double t = 0.0;
  ImageD intensity;
};

// Log-intensity image L = log(I + eps).
struct LogFrame {
  double t = 0.0;
  ImageD values;
};

// Spatial gradient of a LogFrame in log-intensity per pixel.
struct GradientField {
  ImageD dx;
  ImageD dy;

  int width() const { return dx.width(); }
  int height() const { return dx.height(); }
};

inline constexpr double kDefaultLogEps = 1e-3;

// Binary 8-bit PGM (P5, maxval 255).
Frame load_frame(const std::filesystem::path& path);
Frame parse_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm(const ImageD& intensity);
void save_frame(const std::filesystem::path& path, const Frame& frame);

// Frame index: one "t filename" line per frame, filenames relative to the
// index file's directory.
struct FrameIndexEntry {
  double t = 0.0;
  std::string filename;
};
std::vector<FrameIndexEntry> load_frame_index(const std::filesystem::path& path);
std::vector<Frame> load_frames(const std::filesystem::path& index_path);

LogFrame to_log(const Frame& frame, double eps = kDefaultLogEps);
// Inverse of to_log, clamped into [0, 1].
Frame to_intensity(const LogFrame& log_frame, double eps = kDefaultLogEps);
// Round-trips a log frame through 8-bit storage, as a camera or the PGM
// writer would see it.
LogFrame quantize_8bit(const LogFrame& log_frame, double eps = kDefaultLogEps);

// Central differences inside, one-sided on the border. Requires >= 3x3.
GradientField gradient(const LogFrame& log_frame);
GradientField gradient(const ImageD& image);

// Bilinear interpolation; throws BoundsError outside [0, w-1] x [0, h-1].
double sample_bilinear(const ImageD& field, Vec2 point);
bool in_domain(const ImageD& field, Vec2 point);

double mean_value(const ImageD& image);
ImageD gaussian_blur(const ImageD& image, double sigma);

// Symmetrically scaled 8-bit rendering of a signed grid (zero maps to 128),
// for inspecting increment patches.
std::vector<std::uint8_t> encode_signed_pgm(std::span<const double> values, int width, int height);

}  // namespace evtrack
