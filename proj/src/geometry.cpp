#include "imdp/geometry.hpp"

#include <algorithm>
#include <limits>

namespace imdp::geom {

std::array<Vec2, 4> OrientedRect::corners() const {
  const Vec2 fwd{std::cos(heading), std::sin(heading)};
  const Vec2 left{-fwd.y, fwd.x};
  const Vec2 l = fwd * half_length;
  const Vec2 w = left * half_width;
  return {center + l + w, center - l + w, center - l - w, center + l - w};
}

namespace {

struct Interval {
  double lo;
  double hi;
};

Interval project(const std::array<Vec2, 4>& pts, Vec2 axis) {
  Interval out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec2& p : pts) {
    const double d = dot(p, axis);
    out.lo = std::min(out.lo, d);
    out.hi = std::max(out.hi, d);
  }
  return out;
}

}  // namespace

bool overlaps(const OrientedRect& a, const OrientedRect& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes{
      Vec2{std::cos(a.heading), std::sin(a.heading)}, Vec2{-std::sin(a.heading), std::cos(a.heading)},
      Vec2{std::cos(b.heading), std::sin(b.heading)}, Vec2{-std::sin(b.heading), std::cos(b.heading)}};
  for (const Vec2& axis : axes) {
    const Interval pa = project(ca, axis);
    const Interval pb = project(cb, axis);
    if (pa.hi <= pb.lo || pb.hi <= pa.lo) return false;
  }
  return true;
}

double signed_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    twice += cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * twice;
}

namespace {

// One Sutherland-Hodgman pass against the half-plane sign * (p[axis] - bound) <= 0.
Polygon clip_half_plane(const Polygon& in, int axis, double bound, double sign) {
  Polygon out;
  if (in.empty()) return out;
  auto coord = [axis](Vec2 p) { return axis == 0 ? p.x : p.y; };
  auto inside = [&](Vec2 p) { return sign * (coord(p) - bound) <= 0.0; };
  for (std::size_t i = 0; i < in.size(); ++i) {
    const Vec2 cur = in[i];
    const Vec2 prev = in[(i + in.size() - 1) % in.size()];
    const bool cur_in = inside(cur);
    const bool prev_in = inside(prev);
    if (cur_in != prev_in) {
      const double t = (bound - coord(prev)) / (coord(cur) - coord(prev));
      out.push_back(prev + (cur - prev) * t);
    }
    if (cur_in) out.push_back(cur);
  }
  return out;
}

}  // namespace

Polygon clip_to_box(std::span<const Vec2> poly, Vec2 box_min, Vec2 box_max) {
  Polygon p(poly.begin(), poly.end());
  p = clip_half_plane(p, 0, box_max.x, 1.0);
  p = clip_half_plane(p, 0, box_min.x, -1.0);
  p = clip_half_plane(p, 1, box_max.y, 1.0);
  p = clip_half_plane(p, 1, box_min.y, -1.0);
  return p;
}

double project_onto_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return 0.0;
  return std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
}

}  // namespace imdp::geom
