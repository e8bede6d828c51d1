#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dmp/dynamics.hpp"
#include "dmp/scenarios.hpp"

namespace dmp {

namespace svg_detail {

struct Mapper {
  double min_x = 0, max_x = 1, min_y = 0, max_y = 1;
  double width = 860, height = 480, pad = 30;

  void include(const Point2& p) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }

  void finalize() {
    const double span_x = std::max(max_x - min_x, 1e-6);
    const double span_y = std::max(max_y - min_y, 1e-6);
    height = pad * 2 + (width - 2 * pad) * span_y / span_x;
    height = std::clamp(height, 160.0, 900.0);
    scale_ = std::min((width - 2 * pad) / span_x, (height - 2 * pad) / span_y);
  }

  // World to pixel, y flipped.
  double px(double x) const { return pad + (x - min_x) * scale_; }
  double py(double y) const { return height - pad - (y - min_y) * scale_; }

 private:
  double scale_ = 1.0;
};

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(2);
  os << std::fixed << v;
  return os.str();
}

inline void append_path(std::string& out, const Mapper& map, const std::vector<Point2>& pts,
                        const std::string& stroke, double width, const std::string& dash) {
  out += "  <path fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) + "\"";
  if (!dash.empty()) out += " stroke-dasharray=\"" + dash + "\"";
  out += " d=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out += (i == 0 ? "M" : " L");
    out += fmt(map.px(pts[i].x)) + " " + fmt(map.py(pts[i].y));
  }
  out += "\"/>\n";
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace svg_detail

// Scene rendering in the visual vocabulary of the case-study figures: solid
// boundaries, dashed commanded centerline, object dots, trajectory with a
// start marker. Exactly one <path> per polyline / trajectory.
inline std::string render_scene_svg(const Scenario& sc, const Trajectory<double>* traj,
                                    const std::string& config_text) {
  svg_detail::Mapper map;
  map.min_x = map.min_y = 1e300;
  map.max_x = map.max_y = -1e300;
  for (const auto* poly : {&sc.centerline, &sc.left_boundary, &sc.right_boundary}) {
    for (const auto& p : poly->points) map.include(p);
  }
  for (int i = 0; i < sc.objects.real_count; ++i) {
    map.include(sc.objects.slots[static_cast<std::size_t>(i)]);
  }
  if (traj != nullptr) {
    for (const auto& s : traj->states) map.include(Point2{s.x, s.y});
  }
  map.min_x -= 3;
  map.max_x += 3;
  map.min_y -= 3;
  map.max_y += 3;
  map.finalize();

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_detail::fmt(map.width) +
         "\" height=\"" + svg_detail::fmt(map.height) + "\">\n";
  out += "  <desc>" + svg_detail::escape_xml(config_text) + "</desc>\n";
  out += "  <rect width=\"100%\" height=\"100%\" fill=\"#fbfbf8\"/>\n";

  svg_detail::append_path(out, map, sc.left_boundary.points, "#444444", 2.2, "");
  svg_detail::append_path(out, map, sc.right_boundary.points, "#444444", 2.2, "");
  svg_detail::append_path(out, map, sc.centerline.points, "#2266cc", 1.6, "7 5");
  for (int i = 0; i < sc.objects.real_count; ++i) {
    const auto& o = sc.objects.slots[static_cast<std::size_t>(i)];
    out += "  <circle cx=\"" + svg_detail::fmt(map.px(o.x)) + "\" cy=\"" +
           svg_detail::fmt(map.py(o.y)) + "\" r=\"5\" fill=\"#cc3322\"/>\n";
  }
  if (traj != nullptr && !traj->states.empty()) {
    std::vector<Point2> pts;
    pts.reserve(traj->states.size());
    for (const auto& s : traj->states) pts.push_back(Point2{s.x, s.y});
    svg_detail::append_path(out, map, pts, "#119944", 2.0, "");
    out += "  <circle cx=\"" + svg_detail::fmt(map.px(pts.front().x)) + "\" cy=\"" +
           svg_detail::fmt(map.py(pts.front().y)) +
           "\" r=\"6\" fill=\"none\" stroke=\"#119944\" stroke-width=\"2\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

// Loss-over-iterations curve; a single <path> plus axis lines.
inline std::string render_loss_curve_svg(const std::vector<double>& history,
                                         const std::string& config_text) {
  const double width = 720, height = 400, pad = 42;
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_detail::fmt(width) +
         "\" height=\"" + svg_detail::fmt(height) + "\">\n";
  out += "  <desc>" + svg_detail::escape_xml(config_text) + "</desc>\n";
  out += "  <rect width=\"100%\" height=\"100%\" fill=\"#fbfbf8\"/>\n";
  out += "  <line x1=\"" + svg_detail::fmt(pad) + "\" y1=\"" + svg_detail::fmt(height - pad) +
         "\" x2=\"" + svg_detail::fmt(width - pad / 2) + "\" y2=\"" +
         svg_detail::fmt(height - pad) + "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  out += "  <line x1=\"" + svg_detail::fmt(pad) + "\" y1=\"" + svg_detail::fmt(height - pad) +
         "\" x2=\"" + svg_detail::fmt(pad) + "\" y2=\"" + svg_detail::fmt(pad / 2) +
         "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  if (!history.empty()) {
    double lo = history[0], hi = history[0];
    for (double v : history) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo < 1e-12) hi = lo + 1.0;
    std::string d;
    for (std::size_t i = 0; i < history.size(); ++i) {
      const double x = pad + (width - 1.5 * pad) * (history.size() == 1
                                                        ? 0.0
                                                        : static_cast<double>(i) /
                                                              static_cast<double>(history.size() - 1));
      const double y = height - pad - (height - 1.5 * pad) * (history[i] - lo) / (hi - lo);
      d += (i == 0 ? "M" : " L") + svg_detail::fmt(x) + " " + svg_detail::fmt(y);
    }
    out += "  <path fill=\"none\" stroke=\"#2266cc\" stroke-width=\"1.5\" d=\"" + d + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace dmp
