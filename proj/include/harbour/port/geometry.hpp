#pragma once

// Planar harbour geometry in the simulator's earth frame (x north, y east,
// metres): polygons, ship footprints and the separating-axis predicates.
// Every predicate treats shapes as closed sets, so exact touching counts.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace harbour::port {

struct Vec2 {
  double x = 0.0, y = 0.0;

  bool operator==(const Vec2&) const = default;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double length(Vec2 a);

using Polygon = std::vector<Vec2>;

/// Oriented rectangle of a hull: centre, heading (rad, clockwise from
/// north), length along the heading and beam across it.
struct Footprint {
  std::string id;
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;
  double beam = 0.0;
};

/// Corners in order bow-starboard, bow-port, stern-port, stern-starboard.
std::array<Vec2, 4> corners(const Footprint& f);

/// Point in polygon, boundary included.
bool contains(const Polygon& poly, Vec2 p);
bool on_boundary(const Polygon& poly, Vec2 p, double tolerance = 0.0);

/// Closed segment intersection.
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

/// True when no two non-adjacent edges touch.
bool is_simple(const Polygon& poly);

double polygon_area(const Polygon& poly);

/// Separating-axis test between two oriented rectangles. Touching overlaps.
bool footprints_overlap(const Footprint& a, const Footprint& b);

/// Rectangle against an arbitrary simple polygon.
bool footprint_hits_polygon(const Footprint& f, const Polygon& poly);

/// A point on both shapes, used as the reported contact point: the mean of
/// the corners contained in the other shape and the edge crossings.
std::optional<Vec2> contact_point(const Footprint& a, const Footprint& b);
std::optional<Vec2> contact_point(const Footprint& f, const Polygon& poly);

}  // namespace harbour::port
