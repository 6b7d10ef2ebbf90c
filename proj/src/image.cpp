#include "evtrack/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "evtrack/error.hpp"

namespace evtrack {
namespace {

// Reads a PGM header token, skipping whitespace and '#' comments.
std::string header_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos])) tok += static_cast<char>(bytes[pos++]);
  return tok;
}

int header_int(std::span<const std::uint8_t> bytes, std::size_t& pos, const char* name) {
  const std::string tok = header_token(bytes, pos);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("PGM: bad ") + name + " '" + tok + "'");
  }
}

}  // namespace

Frame parse_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  if (header_token(bytes, pos) != "P5") throw FormatError("PGM: expected magic P5");
  const int width = header_int(bytes, pos, "width");
  const int height = header_int(bytes, pos, "height");
  const int maxval = header_int(bytes, pos, "maxval");
  if (maxval != 255) throw FormatError("PGM: only 8-bit (maxval 255) images are supported");
  ++pos;  // single whitespace before raster
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() < pos + n) throw FormatError("PGM: truncated raster");

  Frame frame;
  frame.intensity = ImageD(width, height);
  auto out = frame.intensity.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = bytes[pos + i] / 255.0;
  return frame;
}

Frame load_frame(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open frame " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_pgm(bytes);
}

std::vector<std::uint8_t> encode_pgm(const ImageD& intensity) {
  const std::string header =
      "P5\n" + std::to_string(intensity.width()) + " " + std::to_string(intensity.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + intensity.size());
  for (double v : intensity.values())
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  return out;
}

void save_frame(const std::filesystem::path& path, const Frame& frame) {
  const auto bytes = encode_pgm(frame.intensity);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write frame " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<FrameIndexEntry> load_frame_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open frame index " + path.string());
  std::vector<FrameIndexEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    FrameIndexEntry e;
    if (!(ls >> e.t >> e.filename)) throw ParseError("expected \"t filename\"", line_no);
    if (!entries.empty() && e.t < entries.back().t) throw OrderingError("frame time decreases", line_no);
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<Frame> load_frames(const std::filesystem::path& index_path) {
  const auto dir = index_path.parent_path();
  std::vector<Frame> frames;
  for (const auto& e : load_frame_index(index_path)) {
    Frame f = load_frame(dir / e.filename);
    f.t = e.t;
    frames.push_back(std::move(f));
  }
  return frames;
}

LogFrame to_log(const Frame& frame, double eps) {
  if (!(eps > 0.0)) throw DomainError("to_log: eps must be positive");
  LogFrame out{frame.t, ImageD(frame.intensity.width(), frame.intensity.height())};
  auto src = frame.intensity.values();
  auto dst = out.values.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::log(src[i] + eps);
  return out;
}

Frame to_intensity(const LogFrame& log_frame, double eps) {
  Frame out{log_frame.t, ImageD(log_frame.values.width(), log_frame.values.height())};
  auto src = log_frame.values.values();
  auto dst = out.intensity.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::clamp(std::exp(src[i]) - eps, 0.0, 1.0);
  return out;
}

LogFrame quantize_8bit(const LogFrame& log_frame, double eps) {
  Frame f = to_intensity(log_frame, eps);
  for (double& v : f.intensity.values()) v = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  return to_log(f, eps);
}

GradientField gradient(const ImageD& img) {
  const int w = img.width(), h = img.height();
  if (w < 3 || h < 3) throw SizeError("gradient: image must be at least 3x3");
  GradientField g{ImageD(w, h), ImageD(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gx;
      if (x == 0)
        gx = img(1, y) - img(0, y);
      else if (x == w - 1)
        gx = img(w - 1, y) - img(w - 2, y);
      else
        gx = 0.5 * (img(x + 1, y) - img(x - 1, y));
      double gy;
      if (y == 0)
        gy = img(x, 1) - img(x, 0);
      else if (y == h - 1)
        gy = img(x, h - 1) - img(x, h - 2);
      else
        gy = 0.5 * (img(x, y + 1) - img(x, y - 1));
      g.dx(x, y) = gx;
      g.dy(x, y) = gy;
    }
  }
  return g;
}

GradientField gradient(const LogFrame& log_frame) { return gradient(log_frame.values); }

bool in_domain(const ImageD& field, Vec2 p) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= field.width() - 1 && p.y <= field.height() - 1;
}

double sample_bilinear(const ImageD& field, Vec2 p) {
  if (field.empty() || !in_domain(field, p))
    throw BoundsError("sample_bilinear: point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                      ") outside the grid");
  const int w = field.width(), h = field.height();
  int x0 = static_cast<int>(std::floor(p.x));
  int y0 = static_cast<int>(std::floor(p.y));
  x0 = std::min(x0, std::max(w - 2, 0));
  y0 = std::min(y0, std::max(h - 2, 0));
  const double fx = p.x - x0, fy = p.y - y0;
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double top = field(x0, y0) + fx * (field(x1, y0) - field(x0, y0));
  const double bot = field(x0, y1) + fx * (field(x1, y1) - field(x0, y1));
  return top + fy * (bot - top);
}

double mean_value(const ImageD& image) {
  double s = 0.0;
  for (double v : image.values()) s += v;
  return image.empty() ? 0.0 : s / static_cast<double>(image.size());
}

ImageD gaussian_blur(const ImageD& image, double sigma) {
  if (sigma <= 0.0) return image;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& k : kernel) k /= sum;

  const int w = image.width(), h = image.height();
  // Replicated border.
  ImageD tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * image(std::clamp(x + i, 0, w - 1), y);
      tmp(x, y) = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp(x, std::clamp(y + i, 0, h - 1));
      out(x, y) = acc;
    }
  return out;
}

std::vector<std::uint8_t> encode_signed_pgm(std::span<const double> values, int width, int height) {
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, std::abs(v));
  ImageD img(width, height, 0.5);
  if (peak > 0.0) {
    auto dst = img.values();
    for (std::size_t i = 0; i < values.size() && i < dst.size(); ++i) dst[i] = 0.5 + 0.5 * values[i] / peak;
  }
  return encode_pgm(img);
}

}  // namespace evtrack
