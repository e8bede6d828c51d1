#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmp/geometry.hpp"
#include "dmp/rng.hpp"

namespace dmp {

using json = nlohmann::json;

// Fixed-width k-nearest object vector: real objects first, sorted by
// ascending distance to the ego, then (0, 0) placeholder slots. A position
// of exactly (0, 0) always means "empty slot", never a real object.
struct ObjectSet {
  std::vector<Point2> slots;
  int real_count = 0;

  int k() const { return static_cast<int>(slots.size()); }
};

inline bool is_placeholder(const Point2& p) { return p.x == 0.0 && p.y == 0.0; }

// Acceptance predicate carried by a fixture file; evaluated by the harness.
struct Predicate {
  std::string name;
  std::map<std::string, double> params;
  bool optional = false;  // an optional predicate may fail without failing the run
};

// Complete planner input. Geometry is expressed in the ego-centric frame
// once recenter() has run (ego start at the origin).
struct Scenario {
  std::string id;
  double v0 = 0.0;   // initial velocity, m/s
  double h0 = 0.0;   // initial heading, rad
  double v_d = 0.0;  // desired velocity, m/s
  Point2 ego_start{0.0, 0.0};
  Polyline centerline;
  Polyline left_boundary;
  Polyline right_boundary;
  ObjectSet objects;
  double a_max = 3.0;
  double heading_rate_max = degrees_to_radians(40.0);
  double dt = 0.1;
  int horizon = 30;
  std::optional<Predicate> predicate;
};

// ---- operations ------------------------------------------------------------

inline Polyline translate(const Polyline& poly, double dx, double dy) {
  Polyline out = poly;
  for (auto& p : out.points) {
    p.x += dx;
    p.y += dy;
  }
  return out;
}

// Shifts all geometry so the ego start is exactly (0, 0). Idempotent.
inline Scenario recenter(const Scenario& s) {
  Scenario out = s;
  const double dx = -s.ego_start.x;
  const double dy = -s.ego_start.y;
  out.centerline = translate(s.centerline, dx, dy);
  out.left_boundary = translate(s.left_boundary, dx, dy);
  out.right_boundary = translate(s.right_boundary, dx, dy);
  for (int i = 0; i < s.objects.real_count; ++i) {
    out.objects.slots[i].x += dx;
    out.objects.slots[i].y += dy;
  }
  out.ego_start = Point2{0.0, 0.0};
  return out;
}

// Resamples to exactly n points at uniform arc-length fractions, endpoints
// preserved bit-exactly.
inline Polyline resample_polyline(const Polyline& poly, int n) {
  validate_polyline(poly);
  if (n < 2) {
    throw std::invalid_argument("resample_polyline: n must be >= 2, got " + std::to_string(n));
  }
  const std::size_t m = poly.size();
  std::vector<double> cum(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) {
    cum[i] = cum[i - 1] + dist(poly[i - 1], poly[i]);
  }
  const double total = cum.back();

  Polyline out;
  out.points.reserve(static_cast<std::size_t>(n));
  out.points.push_back(poly.points.front());
  std::size_t seg = 0;
  for (int j = 1; j + 1 < n; ++j) {
    const double target = total * static_cast<double>(j) / static_cast<double>(n - 1);
    while (seg + 2 < m && cum[seg + 1] < target) ++seg;
    const double t = (target - cum[seg]) / (cum[seg + 1] - cum[seg]);
    out.points.push_back(Point2{poly[seg].x + t * (poly[seg + 1].x - poly[seg].x),
                                poly[seg].y + t * (poly[seg + 1].y - poly[seg].y)});
  }
  out.points.push_back(poly.points.back());
  validate_polyline(out, "resampled polyline");
  return out;
}

// Keeps the k objects nearest to the ego (ties by input order), sorted by
// ascending distance, and pads the remaining slots with (0, 0).
inline ObjectSet pad_objects(const std::vector<Point2>& objs, const Point2& ego, int k) {
  if (k < 0) throw std::invalid_argument("pad_objects: negative k");
  for (const auto& o : objs) {
    if (is_placeholder(o)) {
      throw std::invalid_argument(
          "pad_objects: real object at exactly (0, 0) clashes with the placeholder convention");
    }
    if (!is_finite(o)) throw std::invalid_argument("pad_objects: non-finite object position");
  }
  std::vector<std::size_t> order(objs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dist(objs[a], ego) < dist(objs[b], ego);
  });

  ObjectSet set;
  set.slots.assign(static_cast<std::size_t>(k), Point2{0.0, 0.0});
  set.real_count = static_cast<int>(std::min<std::size_t>(objs.size(), static_cast<std::size_t>(k)));
  for (int i = 0; i < set.real_count; ++i) {
    set.slots[static_cast<std::size_t>(i)] = objs[order[static_cast<std::size_t>(i)]];
  }
  return set;
}

// ---- validation ------------------------------------------------------------

inline void validate_scenario(const Scenario& s) {
  validate_polyline(s.centerline, "centerline");
  validate_polyline(s.left_boundary, "left_boundary");
  validate_polyline(s.right_boundary, "right_boundary");
  for (double v : {s.v0, s.h0, s.v_d, s.a_max, s.heading_rate_max, s.dt}) {
    if (!std::isfinite(v)) throw std::invalid_argument("scenario '" + s.id + "': non-finite scalar field");
  }
  if (s.dt <= 0.0) throw std::invalid_argument("scenario '" + s.id + "': dt must be positive");
  if (s.horizon < 1) throw std::invalid_argument("scenario '" + s.id + "': horizon must be >= 1");
  if (s.a_max <= 0.0 || s.heading_rate_max <= 0.0) {
    throw std::invalid_argument("scenario '" + s.id + "': control constraints must be positive");
  }
  if (!is_finite(s.ego_start)) {
    throw std::invalid_argument("scenario '" + s.id + "': non-finite ego start");
  }

  const auto& obj = s.objects;
  if (obj.real_count < 0 || obj.real_count > obj.k()) {
    throw std::invalid_argument("scenario '" + s.id + "': object real_count out of range");
  }
  for (int i = 0; i < obj.k(); ++i) {
    const auto& p = obj.slots[static_cast<std::size_t>(i)];
    if (i < obj.real_count) {
      if (is_placeholder(p)) {
        throw std::invalid_argument("scenario '" + s.id + "': real object slot holds (0, 0)");
      }
      if (i > 0 && dist(obj.slots[static_cast<std::size_t>(i - 1)], s.ego_start) >
                       dist(p, s.ego_start) + 1e-12) {
        throw std::invalid_argument("scenario '" + s.id + "': objects not sorted by distance");
      }
    } else if (!is_placeholder(p)) {
      throw std::invalid_argument("scenario '" + s.id + "': placeholder slot holds a real position");
    }
  }

  // Boundaries must flank the centerline: opposite cross-product signs at
  // every centerline node.
  for (const auto& q : s.centerline.points) {
    const double left_side = side_of_polyline(s.left_boundary, q);
    const double right_side = side_of_polyline(s.right_boundary, q);
    if (left_side == 0.0 || right_side == 0.0 || (left_side > 0.0) == (right_side > 0.0)) {
      throw std::invalid_argument("scenario '" + s.id +
                                  "': boundaries do not flank the centerline");
    }
  }
}

// ---- synthesis -------------------------------------------------------------

struct GenConfig {
  int lanes_min = 2;
  int lanes_max = 3;
  double lane_width = 3.5;
  double length_min = 60.0;
  double length_max = 120.0;
  double curvature_max = 0.02;  // 1/m; arcs drawn from +-[0.002, max], half the roads straight
  double sample_spacing = 2.0;
  double v0_max = 15.0;
  double vd_max = 15.0;
  double heading_jitter = degrees_to_radians(45.0);
  double ego_lateral_jitter = 1.5;
  double ego_s_min = 2.0;
  double ego_s_max = 12.0;
  int object_slots = 8;  // k
  double object_spacing = 6.0;
  double object_min_ahead = 8.0;
  double object_lateral_jitter = 1.0;
  bool red_light = false;  // row of obstacles across the road, desired velocity 0
  double red_light_ahead = 20.0;
  double dt = 0.1;
  int horizon = 30;
  double a_max = 3.0;
  double heading_rate_max = degrees_to_radians(40.0);
};

namespace detail {

// Centerline of the road corridor plus left-normal direction at arc length s.
struct RoadFrame {
  double heading0 = 0.0;
  double curvature = 0.0;

  Point2 at(double s) const {
    if (curvature == 0.0) {
      return Point2{s * std::cos(heading0), s * std::sin(heading0)};
    }
    return Point2{(std::sin(heading0 + curvature * s) - std::sin(heading0)) / curvature,
                  -(std::cos(heading0 + curvature * s) - std::cos(heading0)) / curvature};
  }
  double heading(double s) const { return wrap_angle(heading0 + curvature * s); }
  Point2 offset(double s, double lateral) const {
    const Point2 base = at(s);
    const double h = heading0 + curvature * s;
    return Point2{base.x - lateral * std::sin(h), base.y + lateral * std::cos(h)};
  }
};

inline Polyline sample_offset_polyline(const RoadFrame& road, double length, double lateral,
                                       double spacing) {
  const int count = std::max(2, static_cast<int>(std::ceil(length / spacing)) + 1);
  Polyline poly;
  poly.points.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double s = length * static_cast<double>(i) / static_cast<double>(count - 1);
    poly.points.push_back(road.offset(s, lateral));
  }
  return poly;
}

}  // namespace detail

// Deterministic scenario generator: same (seed, config) gives a bit-identical
// scenario. Output is already recentered and validated.
inline Scenario synthesize(std::uint64_t seed, const GenConfig& cfg = {}) {
  if (cfg.object_slots < 0 || cfg.lanes_min < 1 || cfg.lanes_max < cfg.lanes_min) {
    throw std::invalid_argument("synthesize: invalid generator config");
  }
  if (cfg.lane_width <= 0.0 || cfg.length_min <= 0.0 || cfg.length_max < cfg.length_min) {
    throw std::invalid_argument("synthesize: invalid lane geometry");
  }
  Rng rng(seed);
  Rng road_rng = rng.fork(1);
  Rng ego_rng = rng.fork(2);
  Rng object_rng = rng.fork(3);

  detail::RoadFrame road;
  road.heading0 = road_rng.uniform(-kPi, kPi);
  // Red-light rows model an intersection approach; keep those roads straight.
  if (!cfg.red_light && !road_rng.bernoulli(0.5)) {
    const double mag = road_rng.uniform(0.002, cfg.curvature_max);
    road.curvature = road_rng.bernoulli(0.5) ? mag : -mag;
  }
  const int lanes = road_rng.uniform_int(cfg.lanes_min, cfg.lanes_max);
  const double length = road_rng.uniform(cfg.length_min, cfg.length_max);
  const double width = lanes * cfg.lane_width;

  const auto lane_center = [&](int lane) {
    // lane 0 is leftmost; positive lateral offsets are to the left.
    return width / 2.0 - cfg.lane_width / 2.0 - lane * cfg.lane_width;
  };

  const int ego_lane = ego_rng.uniform_int(0, lanes - 1);
  const int commanded_lane = ego_rng.uniform_int(0, lanes - 1);
  const double ego_s = ego_rng.uniform(cfg.ego_s_min, cfg.ego_s_max);
  const double ego_lateral =
      lane_center(ego_lane) + ego_rng.uniform(-cfg.ego_lateral_jitter, cfg.ego_lateral_jitter);

  Scenario s;
  s.id = "synth-" + std::to_string(seed) + (cfg.red_light ? "-redlight" : "");
  s.centerline = detail::sample_offset_polyline(road, length, lane_center(commanded_lane),
                                                cfg.sample_spacing);
  s.left_boundary = detail::sample_offset_polyline(road, length, width / 2.0, cfg.sample_spacing);
  s.right_boundary =
      detail::sample_offset_polyline(road, length, -width / 2.0, cfg.sample_spacing);
  s.ego_start = road.offset(ego_s, ego_lateral);
  s.h0 = wrap_angle(road.heading(ego_s) +
                    ego_rng.uniform(-cfg.heading_jitter, cfg.heading_jitter));
  s.v0 = ego_rng.uniform(0.0, cfg.v0_max);
  s.v_d = cfg.red_light ? 0.0 : ego_rng.uniform(0.0, cfg.vd_max);
  s.a_max = cfg.a_max;
  s.heading_rate_max = cfg.heading_rate_max;
  s.dt = cfg.dt;
  s.horizon = cfg.horizon;

  std::vector<Point2> objs;
  if (cfg.red_light) {
    const double s_row = std::min(ego_s + cfg.red_light_ahead, length - 2.0);
    const int count = std::min(cfg.object_slots, std::max(2, static_cast<int>(width)));
    for (int i = 0; i < count; ++i) {
      const double lateral =
          -(width / 2.0 - 0.4) + (width - 0.8) * static_cast<double>(i) /
                                     static_cast<double>(count - 1);
      objs.push_back(road.offset(s_row, lateral));
    }
  } else {
    const int target = object_rng.uniform_int(0, cfg.object_slots);
    const double s_lo = ego_s + cfg.object_min_ahead;
    const double s_hi = length - 2.0;
    for (int i = 0; i < target && s_lo < s_hi; ++i) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        const double os = object_rng.uniform(s_lo, s_hi);
        const int lane = object_rng.uniform_int(0, lanes - 1);
        const double lat = lane_center(lane) + object_rng.uniform(-cfg.object_lateral_jitter,
                                                                  cfg.object_lateral_jitter);
        const Point2 cand = road.offset(os, lat);
        bool ok = true;
        for (const auto& o : objs) {
          if (dist(o, cand) < cfg.object_spacing) {
            ok = false;
            break;
          }
        }
        if (ok) {
          objs.push_back(cand);
          break;
        }
      }
    }
  }

  // Objects are generated in the construction frame; shift them into the
  // ego frame along with the rest of the geometry.
  const Point2 ego_world = s.ego_start;
  s = recenter(s);
  for (auto& o : objs) {
    o.x -= ego_world.x;
    o.y -= ego_world.y;
  }
  s.objects = pad_objects(objs, Point2{0.0, 0.0}, cfg.object_slots);
  validate_scenario(s);
  return s;
}

// ---- serialization ---------------------------------------------------------

inline json polyline_to_json(const Polyline& poly) {
  json arr = json::array();
  for (const auto& p : poly.points) arr.push_back({p.x, p.y});
  return arr;
}

inline Polyline polyline_from_json(const json& arr, const std::string& name) {
  Polyline poly;
  for (const auto& p : arr) {
    poly.points.push_back(Point2{p.at(0).get<double>(), p.at(1).get<double>()});
  }
  validate_polyline(poly, name);
  return poly;
}

inline json scenario_to_json(const Scenario& s) {
  json j;
  j["schema_version"] = 1;
  j["id"] = s.id;
  j["v0"] = s.v0;
  j["h0"] = s.h0;
  j["vd"] = s.v_d;
  j["ego_start"] = {s.ego_start.x, s.ego_start.y};
  j["a_max"] = s.a_max;
  j["heading_rate_max"] = s.heading_rate_max;
  j["dt"] = s.dt;
  j["horizon"] = s.horizon;
  j["centerline"] = polyline_to_json(s.centerline);
  j["left_boundary"] = polyline_to_json(s.left_boundary);
  j["right_boundary"] = polyline_to_json(s.right_boundary);
  j["object_slots"] = s.objects.k();
  json objs = json::array();
  for (int i = 0; i < s.objects.real_count; ++i) {
    objs.push_back({s.objects.slots[static_cast<std::size_t>(i)].x,
                    s.objects.slots[static_cast<std::size_t>(i)].y});
  }
  j["objects"] = objs;
  if (s.predicate) {
    json p;
    p["name"] = s.predicate->name;
    p["params"] = s.predicate->params;
    p["optional"] = s.predicate->optional;
    j["predicate"] = p;
  }
  return j;
}

inline const json& require_field(const json& j, const std::string& key,
                                 const std::string& context) {
  if (!j.contains(key)) {
    throw std::runtime_error(context + ": missing field '" + key + "'");
  }
  return j.at(key);
}

inline Scenario scenario_from_json(const json& j, const std::string& context = "scenario") {
  const int version = require_field(j, "schema_version", context).get<int>();
  if (version != 1) {
    throw std::runtime_error(context + ": unsupported schema_version " + std::to_string(version));
  }
  Scenario s;
  s.id = require_field(j, "id", context).get<std::string>();
  s.v0 = require_field(j, "v0", context).get<double>();
  s.h0 = require_field(j, "h0", context).get<double>();
  s.v_d = require_field(j, "vd", context).get<double>();
  const auto& ego = require_field(j, "ego_start", context);
  s.ego_start = Point2{ego.at(0).get<double>(), ego.at(1).get<double>()};
  s.a_max = require_field(j, "a_max", context).get<double>();
  s.heading_rate_max = require_field(j, "heading_rate_max", context).get<double>();
  s.dt = require_field(j, "dt", context).get<double>();
  s.horizon = require_field(j, "horizon", context).get<int>();
  s.centerline = polyline_from_json(require_field(j, "centerline", context), "centerline");
  s.left_boundary =
      polyline_from_json(require_field(j, "left_boundary", context), "left_boundary");
  s.right_boundary =
      polyline_from_json(require_field(j, "right_boundary", context), "right_boundary");
  const int k = require_field(j, "object_slots", context).get<int>();
  std::vector<Point2> objs;
  for (const auto& o : require_field(j, "objects", context)) {
    objs.push_back(Point2{o.at(0).get<double>(), o.at(1).get<double>()});
  }
  s.objects = pad_objects(objs, s.ego_start, k);
  if (j.contains("predicate")) {
    Predicate p;
    const auto& pj = j.at("predicate");
    p.name = require_field(pj, "name", context + " predicate").get<std::string>();
    if (pj.contains("params")) {
      for (const auto& [key, value] : pj.at("params").items()) {
        p.params[key] = value.get<double>();
      }
    }
    p.optional = pj.value("optional", false);
    s.predicate = p;
  }
  return s;
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_scenario: cannot open '" + path + "' for writing");
  out << scenario_to_json(s).dump(2) << "\n";
  if (!out) throw std::runtime_error("save_scenario: write to '" + path + "' failed");
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_scenario: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("load_scenario: '" + path + "' is not valid JSON: " + e.what());
  }
  return scenario_from_json(j, "scenario file '" + path + "'");
}

}  // namespace dmp
