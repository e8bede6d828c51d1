#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmp {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

// Ordered node sequence along the direction of travel. Consecutive points
// must be distinct so every segment has a well-defined heading.
struct Polyline {
  std::vector<Point2> points;

  std::size_t size() const { return points.size(); }
  const Point2& operator[](std::size_t i) const { return points[i]; }
};

inline bool is_finite(const Point2& p) {
  return std::isfinite(p.x) && std::isfinite(p.y);
}

inline void validate_polyline(const Polyline& poly, const std::string& name = "polyline") {
  if (poly.points.size() < 2) {
    throw std::invalid_argument(name + ": needs at least 2 points, got " +
                                std::to_string(poly.points.size()));
  }
  for (std::size_t i = 0; i < poly.points.size(); ++i) {
    if (!is_finite(poly.points[i])) {
      throw std::invalid_argument(name + ": non-finite point at index " + std::to_string(i));
    }
    if (i > 0 && poly.points[i] == poly.points[i - 1]) {
      throw std::invalid_argument(name + ": zero-length segment at index " +
                                  std::to_string(i - 1));
    }
  }
}

inline double dist(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

inline Point2 midpoint(const Point2& a, const Point2& b) {
  return Point2{(a.x + b.x) / 2.0, (a.y + b.y) / 2.0};
}

// Wraps into (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

struct NearestSegment {
  std::size_t index = 0;  // segment i spans points[i] .. points[i+1]
  double distance = 0.0;
};

// Segment-midpoint distance rule: the nearest segment is the one whose
// midpoint is closest to the query, not the one with the smallest true
// point-to-segment distance. Ties break to the lowest index.
inline NearestSegment nearest_segment(const Polyline& poly, const Point2& q) {
  validate_polyline(poly);
  NearestSegment best{0, dist(q, midpoint(poly[0], poly[1]))};
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    const double d = dist(q, midpoint(poly[i], poly[i + 1]));
    if (d < best.distance) best = {i, d};
  }
  return best;
}

inline double segment_heading(const Polyline& poly, std::size_t i) {
  if (i + 1 >= poly.size()) {
    throw std::out_of_range("segment_heading: segment index " + std::to_string(i) +
                            " out of range for polyline of " +
                            std::to_string(poly.size()) + " points");
  }
  // +0.0 normalizes a possible -0.0 delta so the result stays in (-pi, pi].
  return std::atan2(poly[i + 1].y - poly[i].y + 0.0, poly[i + 1].x - poly[i].x + 0.0);
}

// True point-to-segment distance. Used by the optional exact-segment CTE
// mode and by geometric post-checks; the loss default is the midpoint rule.
inline double point_segment_distance(const Point2& a, const Point2& b, const Point2& q) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = ((q.x - a.x) * vx + (q.y - a.y) * vy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return dist(q, Point2{a.x + t * vx, a.y + t * vy});
}

inline NearestSegment nearest_segment_exact(const Polyline& poly, const Point2& q) {
  validate_polyline(poly);
  NearestSegment best{0, point_segment_distance(poly[0], poly[1], q)};
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    const double d = point_segment_distance(poly[i], poly[i + 1], q);
    if (d < best.distance) best = {i, d};
  }
  return best;
}

// Sign of the cross product (b-a) x (q-a): > 0 when q is left of the segment
// direction. Used for boundary sidedness checks.
inline double side_of_segment(const Point2& a, const Point2& b, const Point2& q) {
  return (b.x - a.x) * (q.y - a.y) - (b.y - a.y) * (q.x - a.x);
}

// Side of a polyline at the segment nearest (true distance) to q.
inline double side_of_polyline(const Polyline& poly, const Point2& q) {
  const auto near = nearest_segment_exact(poly, q);
  return side_of_segment(poly[near.index], poly[near.index + 1], q);
}

inline double degrees_to_radians(double deg) { return deg * kPi / 180.0; }
inline double radians_to_degrees(double rad) { return rad * 180.0 / kPi; }

}  // namespace dmp
