#ifndef GUIDE_CORE_GEOMETRY_HPP_
#define GUIDE_CORE_GEOMETRY_HPP_

#include <algorithm>
#include <cmath>
#include <variant>

namespace guide {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
  double Norm() const { return std::hypot(x, y); }
};

inline double Distance(Vec2 a, Vec2 b) { return (a - b).Norm(); }

struct Disc {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
  bool operator==(const Disc&) const = default;
};

struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  bool operator==(const Rect&) const = default;
};

using Shape = std::variant<Disc, Rect>;

inline Vec2 Center(const Shape& s) {
  if (const auto* d = std::get_if<Disc>(&s)) return {d->cx, d->cy};
  const auto& r = std::get<Rect>(s);
  return {(r.x0 + r.x1) / 2.0, (r.y0 + r.y1) / 2.0};
}

// Distance from p to the closed set; 0 inside.
inline double DistanceTo(const Shape& s, Vec2 p) {
  if (const auto* d = std::get_if<Disc>(&s)) {
    return std::max(0.0, Distance(p, {d->cx, d->cy}) - d->r);
  }
  const auto& r = std::get<Rect>(s);
  const double dx = std::max({r.x0 - p.x, 0.0, p.x - r.x1});
  const double dy = std::max({r.y0 - p.y, 0.0, p.y - r.y1});
  return std::hypot(dx, dy);
}

inline bool Contains(const Shape& s, Vec2 p) {
  if (const auto* d = std::get_if<Disc>(&s)) {
    return Distance(p, {d->cx, d->cy}) <= d->r;
  }
  const auto& r = std::get<Rect>(s);
  return p.x >= r.x0 && p.x <= r.x1 && p.y >= r.y0 && p.y <= r.y1;
}

// Nearest point of the closed set to p (p itself when inside).
inline Vec2 NearestPoint(const Shape& s, Vec2 p) {
  if (const auto* d = std::get_if<Disc>(&s)) {
    const Vec2 c{d->cx, d->cy};
    const double dist = Distance(p, c);
    if (dist <= d->r) return p;
    return c + (p - c) * (d->r / dist);
  }
  const auto& r = std::get<Rect>(s);
  return {std::clamp(p.x, r.x0, r.x1), std::clamp(p.y, r.y0, r.y1)};
}

}  // namespace guide

#endif  // GUIDE_CORE_GEOMETRY_HPP_
