#pragma once

#include <cmath>
#include <vector>

namespace rearrange {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
/// z-component of the 2D cross product.
constexpr double det(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
constexpr double norm_sq(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double norm_l1(Vec2 a) { return std::abs(a.x) + std::abs(a.y); }
/// Counter-clockwise perpendicular.
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

/// A per-ball 2-vector field over a state (gradients, velocities).
using Field = std::vector<Vec2>;

/// Euclidean norm of a field flattened to a 2K vector.
inline double flat_norm(const Field& f) {
  double s = 0.0;
  for (const Vec2& v : f) s += norm_sq(v);
  return std::sqrt(s);
}

inline double flat_dot(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) s += dot(a[i], b[i]);
  return s;
}

/// Cosine similarity of two flattened fields; 0 when either is zero.
inline double cosine_similarity(const Field& a, const Field& b) {
  const double na = flat_norm(a);
  const double nb = flat_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return flat_dot(a, b) / (na * nb);
}

}  // namespace rearrange
