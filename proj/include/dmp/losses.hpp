#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "dmp/dynamics.hpp"
#include "dmp/geometry.hpp"
#include "dmp/scenarios.hpp"
#include "dmp/tape.hpp"

namespace dmp {

// Cross-track error rule. kMidpoint is the segment-midpoint distance the
// loss is defined with; kExactSegment is a tighter point-to-segment variant
// kept behind this switch and off by default.
enum class CteMode { kMidpoint, kExactSegment };

struct LossWeights {
  double alpha = 15.0;  // cross-track error
  double beta = 9.0;    // heading error
  double gamma = 11.0;  // velocity error
  double mu = 100.0;    // collision exponential
  double rho = 30.0;    // boundary exponential (2 * alpha)
  double collision_shift = 5.0;  // meters
  double boundary_shift = 1.0;   // meters
  CteMode cte_mode = CteMode::kMidpoint;
};

inline void validate_weights(const LossWeights& w) {
  for (double v : {w.alpha, w.beta, w.gamma, w.mu, w.rho, w.collision_shift, w.boundary_shift}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("loss weights must be finite and nonnegative");
    }
  }
}

template <class T>
struct CteResult {
  T distance;
  std::size_t segment;  // argmin segment, consumed by the heading error
};

namespace detail {

// Distance from (px, py) to the reference point of segment i. In midpoint
// mode that is the segment midpoint; in exact mode it is the projection of
// the query onto the segment, with the projection parameter frozen at its
// forward value (exact a.e. by stationarity of the projection).
template <class T>
T segment_ref_distance(const T& px, const T& py, const Polyline& poly, std::size_t i,
                       CteMode mode) {
  const Point2& a = poly[i];
  const Point2& b = poly[i + 1];
  if (mode == CteMode::kMidpoint) {
    const Point2 m = midpoint(a, b);
    return hypot_xy(px - m.x, py - m.y);
  }
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double t = std::clamp(
      ((val(px) - a.x) * vx + (val(py) - a.y) * vy) / (vx * vx + vy * vy), 0.0, 1.0);
  return hypot_xy(px - (a.x + t * vx), py - (a.y + t * vy));
}

}  // namespace detail

// Minimum distance from the position to the per-segment reference points,
// looping over every consecutive pair. Ties break to the lowest index.
template <class T>
CteResult<T> e_cte(const T& px, const T& py, const Polyline& center,
                   CteMode mode = CteMode::kMidpoint) {
  validate_polyline(center, "centerline");
  using std::min;
  T best = detail::segment_ref_distance(px, py, center, 0, mode);
  std::size_t best_idx = 0;
  for (std::size_t i = 1; i + 1 < center.size(); ++i) {
    const T d = detail::segment_ref_distance(px, py, center, i, mode);
    if (val(d) < val(best)) best_idx = i;
    best = min(best, d);
  }
  return CteResult<T>{best, best_idx};
}

// Absolute wrapped difference between the vehicle heading and the road
// heading of the segment selected by e_cte; lands in [0, pi].
template <class T>
T e_he_at(const T& h, const Polyline& center, std::size_t segment) {
  using std::abs;
  return abs(wrap_angle(h - segment_heading(center, segment)));
}

template <class T>
T e_he(const T& h, const Polyline& center, const T& px, const T& py,
       CteMode mode = CteMode::kMidpoint) {
  return e_he_at(h, center, e_cte(px, py, center, mode).segment);
}

template <class T>
T e_ve(const T& v, double v_desired) {
  using std::abs;
  return abs(v - v_desired);
}

namespace detail {

// exp(shift - d) with an explicit overflow guard. Distances are nonnegative
// so the exponent is bounded by the shift, but the guard stays for callers
// that feed arbitrary values.
template <class T>
T shifted_exp(const T& d, double shift) {
  using std::exp;
  if (shift - val(d) > 700.0) {
    throw NumericError("loss: exponential overflow in shifted distance term");
  }
  return exp(shift - d);
}

}  // namespace detail

// Sum over real objects of exp(shift - distance); placeholder (0, 0) slots
// contribute nothing and add no tape nodes.
template <class T>
T e_collision(const T& px, const T& py, const ObjectSet& objects, double shift = 5.0) {
  T total = px * 0.0;
  for (int i = 0; i < objects.real_count; ++i) {
    const Point2& o = objects.slots[static_cast<std::size_t>(i)];
    const T d = hypot_xy(px - o.x, py - o.y);
    total += detail::shifted_exp(d, shift);
  }
  return total;
}

// Soft boundary repulsion: exp(shift - d) against each boundary, using the
// same distance rule as the cross-track error.
template <class T>
T e_boundary(const T& px, const T& py, const Polyline& left, const Polyline& right,
             double shift = 1.0, CteMode mode = CteMode::kMidpoint) {
  const T d_left = e_cte(px, py, left, mode).distance;
  const T d_right = e_cte(px, py, right, mode).distance;
  return detail::shifted_exp(d_left, shift) + detail::shifted_exp(d_right, shift);
}

// Full objective over a trajectory, each step's contribution scaled by its
// 1-based index. Also keeps the raw per-step terms and the weighted per-term
// sums for reporting; index 0 (the initial state) contributes nothing.
template <class T>
struct LossBreakdown {
  T total;
  std::vector<double> cte, he, ve, collision, boundary;  // raw terms per step
  double weighted_cte = 0.0, weighted_he = 0.0, weighted_ve = 0.0;
  double weighted_collision = 0.0, weighted_boundary = 0.0;
};

template <class T>
LossBreakdown<T> planner_loss(const Trajectory<T>& traj, const Scenario& scenario,
                              const LossWeights& w) {
  validate_weights(w);
  if (traj.states.empty()) {
    throw std::invalid_argument("planner_loss: empty trajectory");
  }
  const std::size_t steps = traj.states.size() - 1;

  LossBreakdown<T> out;
  out.total = traj.states[0].x * 0.0;
  out.cte.assign(steps + 1, 0.0);
  out.he.assign(steps + 1, 0.0);
  out.ve.assign(steps + 1, 0.0);
  out.collision.assign(steps + 1, 0.0);
  out.boundary.assign(steps + 1, 0.0);

  for (std::size_t t = 1; t <= steps; ++t) {
    const auto& s = traj.states[t];
    const auto cte = e_cte(s.x, s.y, scenario.centerline, w.cte_mode);
    const T he = e_he_at(s.h, scenario.centerline, cte.segment);
    const T ve = e_ve(s.v, scenario.v_d);
    const T collision = e_collision(s.x, s.y, scenario.objects, w.collision_shift);
    const T boundary = e_boundary(s.x, s.y, scenario.left_boundary, scenario.right_boundary,
                                  w.boundary_shift, w.cte_mode);

    const double ramp = static_cast<double>(t);
    const T maneuver = w.alpha * cte.distance + w.beta * he + w.gamma * ve;
    const T safety = w.mu * collision + w.rho * boundary;
    out.total += ramp * (maneuver + safety);

    out.cte[t] = val(cte.distance);
    out.he[t] = val(he);
    out.ve[t] = val(ve);
    out.collision[t] = val(collision);
    out.boundary[t] = val(boundary);
    out.weighted_cte += ramp * w.alpha * out.cte[t];
    out.weighted_he += ramp * w.beta * out.he[t];
    out.weighted_ve += ramp * w.gamma * out.ve[t];
    out.weighted_collision += ramp * w.mu * out.collision[t];
    out.weighted_boundary += ramp * w.rho * out.boundary[t];
  }
  return out;
}

}  // namespace dmp
