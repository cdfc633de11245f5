#include "harbour/port/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace harbour::port {

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
}

bool within_box(Vec2 a, Vec2 b, Vec2 p) {
  return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
         p.y <= std::max(a.y, b.y);
}

double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return length(p - (a + t * ab));
}

std::optional<Vec2> segment_crossing(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  if (!segments_intersect(a, b, c, d)) return std::nullopt;
  const Vec2 r = b - a;
  const Vec2 s = d - c;
  const double den = cross(r, s);
  if (den == 0.0) {
    // Collinear overlap: report an endpoint lying on the other segment.
    for (Vec2 p : {a, b}) {
      if (within_box(c, d, p)) return p;
    }
    return c;
  }
  const double t = cross(c - a, s) / den;
  return a + t * r;
}

Polygon as_polygon(const Footprint& f) {
  const auto c = corners(f);
  return Polygon(c.begin(), c.end());
}

std::optional<Vec2> average(const std::vector<Vec2>& pts) {
  if (pts.empty()) return std::nullopt;
  Vec2 sum;
  for (Vec2 p : pts) sum = sum + p;
  return (1.0 / static_cast<double>(pts.size())) * sum;
}

std::optional<Vec2> polygon_contact(const Polygon& a, const Polygon& b) {
  std::vector<Vec2> pts;
  for (Vec2 p : a) {
    if (contains(b, p)) pts.push_back(p);
  }
  for (Vec2 p : b) {
    if (contains(a, p)) pts.push_back(p);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec2 p = a[i];
    const Vec2 q = a[(i + 1) % a.size()];
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (auto x = segment_crossing(p, q, b[j], b[(j + 1) % b.size()])) pts.push_back(*x);
    }
  }
  return average(pts);
}

}  // namespace

double length(Vec2 a) { return std::hypot(a.x, a.y); }

std::array<Vec2, 4> corners(const Footprint& f) {
  const Vec2 fwd{std::cos(f.heading), std::sin(f.heading)};
  const Vec2 stbd{-fwd.y, fwd.x};
  const Vec2 h = (0.5 * f.length) * fwd;
  const Vec2 w = (0.5 * f.beam) * stbd;
  return {f.center + h + w, f.center + h - w, f.center - h - w, f.center - h + w};
}

bool on_boundary(const Polygon& poly, Vec2 p, double tolerance) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % poly.size()];
    if (tolerance > 0.0) {
      if (distance_to_segment(p, a, b) <= tolerance) return true;
    } else if (orientation(a, b, p) == 0 && within_box(a, b, p)) {
      return true;
    }
  }
  return false;
}

bool contains(const Polygon& poly, Vec2 p) {
  if (poly.size() < 3) return false;
  if (on_boundary(poly, p)) return true;
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && within_box(a, b, c)) return true;
  if (o2 == 0 && within_box(a, b, d)) return true;
  if (o3 == 0 && within_box(c, d, a)) return true;
  if (o4 == 0 && within_box(c, d, b)) return true;
  return false;
}

bool is_simple(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (poly[i] == poly[(i + 1) % n]) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

double polygon_area(const Polygon& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * std::abs(a);
}

bool footprints_overlap(const Footprint& a, const Footprint& b) {
  const auto ca = corners(a);
  const auto cb = corners(b);
  const Vec2 axes[4] = {{std::cos(a.heading), std::sin(a.heading)},
                        {-std::sin(a.heading), std::cos(a.heading)},
                        {std::cos(b.heading), std::sin(b.heading)},
                        {-std::sin(b.heading), std::cos(b.heading)}};
  for (Vec2 axis : axes) {
    double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
    for (Vec2 p : ca) {
      const double d = dot(p, axis);
      amin = std::min(amin, d);
      amax = std::max(amax, d);
    }
    for (Vec2 p : cb) {
      const double d = dot(p, axis);
      bmin = std::min(bmin, d);
      bmax = std::max(bmax, d);
    }
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

bool footprint_hits_polygon(const Footprint& f, const Polygon& poly) {
  const auto c = corners(f);
  for (Vec2 p : c) {
    if (contains(poly, p)) return true;
  }
  const Polygon rect(c.begin(), c.end());
  for (Vec2 p : poly) {
    if (contains(rect, p)) return true;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < poly.size(); ++j) {
      if (segments_intersect(c[i], c[(i + 1) % 4], poly[j], poly[(j + 1) % poly.size()])) {
        return true;
      }
    }
  }
  return false;
}

std::optional<Vec2> contact_point(const Footprint& a, const Footprint& b) {
  if (!footprints_overlap(a, b)) return std::nullopt;
  return polygon_contact(as_polygon(a), as_polygon(b));
}

std::optional<Vec2> contact_point(const Footprint& f, const Polygon& poly) {
  if (!footprint_hits_polygon(f, poly)) return std::nullopt;
  return polygon_contact(as_polygon(f), poly);
}

}  // namespace harbour::port
