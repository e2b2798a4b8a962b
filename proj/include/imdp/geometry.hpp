#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace imdp::geom {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Rotates by `angle` radians counter-clockwise.
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Exact quarter-turn rotation (no trigonometric rounding).
constexpr Vec2 rotate_quarter(Vec2 v, int quarter_turns) {
  const int q = ((quarter_turns % 4) + 4) % 4;
  switch (q) {
    case 1: return {-v.y, v.x};
    case 2: return {-v.x, -v.y};
    case 3: return {v.y, -v.x};
    default: return v;
  }
}

/// Rectangle with a heading; half_length runs along the heading.
struct OrientedRect {
  Vec2 center;
  double heading = 0.0;
  double half_length = 0.0;
  double half_width = 0.0;

  std::array<Vec2, 4> corners() const;
  double area() const { return 4.0 * half_length * half_width; }
};

/// Separating-axis test. Overlap must have positive area: rectangles that
/// only touch along an edge or at a corner are reported as disjoint.
bool overlaps(const OrientedRect& a, const OrientedRect& b);

using Polygon = std::vector<Vec2>;

/// Signed shoelace area (positive for counter-clockwise winding).
double signed_area(std::span<const Vec2> poly);

/// Clips a convex polygon against an axis-aligned box (Sutherland-Hodgman).
Polygon clip_to_box(std::span<const Vec2> poly, Vec2 box_min, Vec2 box_max);

/// Closest point on segment [a, b] to p, as a parameter in [0, 1].
double project_onto_segment(Vec2 p, Vec2 a, Vec2 b);

}  // namespace imdp::geom
