#pragma once

#include <cmath>
#include <vector>

namespace bgnflow {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend Vec2 operator*(Vec2 v, double s) { return s * v; }
  friend Vec2 operator/(Vec2 v, double s) { return {v.x / s, v.y / s}; }
  Vec2& operator+=(Vec2 v) {
    x += v.x;
    y += v.y;
    return *this;
  }
  Vec2& operator-=(Vec2 v) {
    x -= v.x;
    y -= v.y;
    return *this;
  }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double norm_sq(Vec2 v) { return v.x * v.x + v.y * v.y; }

// Tangent rotated by -90 degrees; outward normal for counterclockwise curves.
inline Vec2 rotate_minus_90(Vec2 v) { return {v.y, -v.x}; }

using ScalarField = std::vector<double>;
using VectorField = std::vector<Vec2>;

}  // namespace bgnflow
