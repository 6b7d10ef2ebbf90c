#pragma once

#include <cmath>

namespace evtrack {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// Planar rigid motion W(u) = R(theta) u + t.
struct WarpSE2 {
  double theta = 0.0;
  Vec2 t{};

  static WarpSE2 identity() { return {}; }

  Vec2 rotate(Vec2 u) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * u.x - s * u.y, s * u.x + c * u.y};
  }
  Vec2 rotate_inverse(Vec2 u) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * u.x + s * u.y, -s * u.x + c * u.y};
  }

  Vec2 apply(Vec2 u) const { return rotate(u) + t; }
  Vec2 apply_inverse(Vec2 u) const { return rotate_inverse(u - t); }

  WarpSE2 inverse() const { return {-theta, -rotate_inverse(t)}; }

  // (a * b)(u) = a(b(u))
  friend WarpSE2 compose(const WarpSE2& a, const WarpSE2& b) {
    return {a.theta + b.theta, a.rotate(b.t) + a.t};
  }
};

// Direction of the optic flow. Only the angle is stored, so the unit vector
// has norm one by construction and the flow magnitude never enters the
// optimisation.
class FlowDirection {
 public:
  FlowDirection() = default;
  explicit FlowDirection(double angle) : angle_(wrap(angle)) {}

  static FlowDirection from_vector(Vec2 v) { return FlowDirection(std::atan2(v.y, v.x)); }

  double angle() const { return angle_; }
  Vec2 unit() const { return {std::cos(angle_), std::sin(angle_)}; }

  static double wrap(double a) {
    a = std::remainder(a, 2.0 * M_PI);
    return a;
  }

 private:
  double angle_ = 0.0;
};

// Smallest absolute difference between two angles, in [0, pi].
inline double angle_distance(double a, double b) {
  return std::abs(std::remainder(a - b, 2.0 * M_PI));
}

}  // namespace evtrack
