#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace navbench {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Unit vector of `a`, or the zero vector when `a` is zero.
inline Vec2 normalized(Vec2 a) {
  const double n = norm(a);
  return n > 0.0 ? a / n : Vec2{};
}

/// Rotates `a` counter-clockwise by `angle` radians.
inline Vec2 rotate(Vec2 a, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * a.x - s * a.y, s * a.x + c * a.y};
}

/// Maps any angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double pi = std::numbers::pi;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (a > -pi && a <= pi) return a;
  a = std::fmod(a, two_pi);
  if (a <= -pi) a += two_pi;
  if (a > pi) a -= two_pi;
  return a;
}

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  constexpr Vec2 position() const { return {x, y}; }
  friend constexpr bool operator==(const Pose2&, const Pose2&) = default;
};

/// Closest point to `p` on the closed axis-aligned box [lo, hi].
inline Vec2 closest_point_on_box(Vec2 p, Vec2 lo, Vec2 hi) {
  return {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y)};
}

}  // namespace navbench
