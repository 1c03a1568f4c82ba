#pragma once

// JSON records of library results, SVG polylines in the chart plane, and
// all-or-nothing file output.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "systole/integral_geometry.hpp"
#include "systole/loop_surgery.hpp"
#include "systole/pu_verifier.hpp"

namespace systole {

using Json = nlohmann::ordered_json;

inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const ChartPoint& p) { return p.is_infinite() ? Json("infinity") : to_json(p.value()); }

inline Json to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

inline Json to_json(const GreatCircle& g) { return Json{{"normal", to_json(g.normal())}}; }

inline Json to_json(const PolyLoop& loop) {
  Json verts = Json::array();
  for (const auto& v : loop.vertices) verts.push_back(to_json(v));
  Json j{{"vertices", verts}, {"basepoint_index", loop.basepoint_index}, {"arc_tags", loop.arc_tags}};
  j["metric_length"] = loop.metric_length ? Json(*loop.metric_length) : Json(nullptr);
  return j;
}

inline Json to_json(const Curve& c) {
  Json s = Json::array();
  for (const auto& p : c.samples) s.push_back(to_json(p));
  return Json{{"samples", s}, {"closed", c.closed}};
}

inline Json to_json(const WindingProfile& w) {
  Json m = Json::object();
  for (const auto& [id, n] : w.winding) m[std::to_string(id)] = n;
  return Json{{"winding", m}, {"odd_set", w.odd_set}, {"odd", w.odd()}};
}

inline Json to_json(const Slack& s) {
  return Json{{"monte_carlo", s.monte_carlo},
              {"perturbation", s.perturbation},
              {"quadrature", s.quadrature},
              {"discretization", s.discretization},
              {"total", s.total()}};
}

inline Json to_json(const HoopResult& h) {
  return Json{{"hoop_id", h.hoop_id},
              {"weierstrass_point", to_json(h.weierstrass)},
              {"source", to_json(h.source)},
              {"figure_length", h.figure_length},
              {"hoop_length", h.smooth_length},
              {"other_hoop_length", h.other_hoop_length},
              {"polyline_length", h.polyline_length},
              {"vertices", h.vertices},
              {"bound", h.bound},
              {"delta_monte_carlo", h.delta_mc},
              {"delta_discretization", h.delta_discretization}};
}

inline Json to_json(const PuCertificate& c) {
  Json comps = Json::array();
  for (const auto& cc : c.component_curves)
    comps.push_back(Json{{"hoop_id", cc.hoop_id}, {"weierstrass_point", to_json(cc.weierstrass)},
                         {"source", to_json(cc.source)}, {"hoop_length", cc.hoop_length}});
  Json hoops = Json::array();
  for (const auto& h : c.hoops) hoops.push_back(to_json(h));
  return Json{{"p", to_json(c.p)},
              {"path_length", c.path_length},
              {"area", c.area},
              {"area_before_symmetrization", c.area_original},
              {"ratio", c.ratio},
              {"bound", c.bound},
              {"delta", c.delta},
              {"slack", to_json(c.slack)},
              {"ratio_within_bound", c.ratio <= c.bound * (1.0 + c.delta)},
              {"lift_closes", c.lift_closes},
              {"continuation_negates_branch", c.continuation_negates},
              {"conjugate_used", c.conjugate_used},
              {"used_hoops", c.used_tags},
              {"surgeries", c.surgeries},
              {"perturbation_rounds", c.perturbation_rounds},
              {"component_curves", comps},
              {"hoops", hoops},
              {"trace", c.trace},
              {"loop", to_json(c.loop)}};
}

inline Json to_json(const SystoleEstimate& e) {
  return Json{{"value", e.value},     {"area", e.area},   {"bound", e.bound},
              {"delta", e.delta},     {"method", e.method}, {"inequality_holds", e.inequality_holds},
              {"witness", to_json(e.witness)}};
}

inline Json to_json(const AveragingReport& r) {
  return Json{{"samples", r.sample_count},
              {"resampled", r.resampled},
              {"mean_energy", r.mean_energy},
              {"energy_standard_error", r.energy_standard_error},
              {"circle_integral", r.circle_integral},
              {"circle_integral_standard_error", r.circle_integral_standard_error},
              {"area", r.area},
              {"area_error", r.area_error},
              {"two_pi_area", r.area_term},
              {"agree_within_3_sigma", r.agree},
              {"best_circle", to_json(r.best_circle)},
              {"best_length", r.best_length},
              {"mean_length", r.mean_length},
              {"delta", r.delta}};
}

inline Json to_json(const FootballSearchResult& r) {
  return Json{{"source", to_json(r.geodesic.source)},
              {"figure_length", r.figure_length},
              {"hoop_lengths", {r.hoop_lengths[0], r.hoop_lengths[1]}},
              {"area", r.area},
              {"cover_area", r.cover_area},
              {"delta", r.delta},
              {"mean_figure_length", r.mean_figure_length},
              {"skipped", r.skipped},
              {"inversion_symmetric", r.inversion_symmetric},
              {"figure_bound_holds", r.figure_bound_holds},
              {"hoop_bound_holds", r.hoop_bound_holds}};
}

inline Json to_json(const HyperellipticSurface& X) {
  Json coeffs = Json::array();
  for (double c : X.coeffs()) coeffs.push_back(c);
  Json roots = Json::array();
  for (const auto& r : X.weierstrass_roots()) roots.push_back(to_json(r));
  Json upper = Json::array();
  for (const auto& s : labeled_upper_roots(X)) upper.push_back(Json{{"id", s.id}, {"z", to_json(s.z)}});
  return Json{{"coefficients", coeffs}, {"degree", X.degree()}, {"genus", X.genus()},
              {"weierstrass_roots", roots}, {"upper_roots", upper}};
}

// ---------------------------------------------------------------------------
// SVG.

struct SvgPolyline {
  std::vector<Complex> points;
  bool closed = false;
  std::string stroke = "black";
  double width = 1.0;
};

/// Chart-plane figure, y upward; panels sit side by side.
class SvgFigure {
 public:
  SvgFigure(double xmin, double xmax, double ymin, double ymax, double pixels_per_unit = 120.0)
      : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax), scale_(pixels_per_unit) {}

  void add_polyline(const SvgPolyline& p, int panel = 0) { items_.push_back({panel, p, {}, {}}); }
  void add_cross(Complex z, const std::string& stroke, int panel = 0) { items_.push_back({panel, {}, z, stroke}); }
  void add_unit_circle(int panel = 0) {
    SvgPolyline c{{}, true, "#888888", 0.8};
    for (int i = 0; i < 256; ++i) c.points.push_back(std::polar(1.0, kTwoPi * i / 256));
    add_polyline(c, panel);
  }
  void add_real_axis(int panel = 0) { add_polyline({{{xmin_, 0.0}, {xmax_, 0.0}}, false, "#bbbbbb", 0.8}, panel); }
  void set_panels(int n) { panels_ = std::max(1, n); }

  std::string str() const {
    const double w = (xmax_ - xmin_) * scale_, h = (ymax_ - ymin_) * scale_;
    std::ostringstream os;
    os << std::setprecision(6) << std::fixed;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w * panels_ << "\" height=\"" << h << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& it : items_) {
      const double dx = it.panel * w;
      if (!it.stroke_cross.empty()) {
        const auto [x, y] = map(it.cross, dx);
        os << "<path d=\"M" << x - 4 << ' ' << y - 4 << " L" << x + 4 << ' ' << y + 4 << " M" << x - 4 << ' ' << y + 4
           << " L" << x + 4 << ' ' << y - 4 << "\" stroke=\"" << it.stroke_cross << "\" stroke-width=\"1.5\"/>\n";
        continue;
      }
      const auto& p = it.line;
      if (p.points.empty()) continue;
      os << "<" << (p.closed ? "polygon" : "polyline") << " fill=\"none\" stroke=\"" << p.stroke
         << "\" stroke-width=\"" << p.width << "\" points=\"";
      for (const auto& z : p.points) {
        const auto [x, y] = map(z, dx);
        os << x << ',' << y << ' ';
      }
      os << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
  }

 private:
  struct Item {
    int panel;
    SvgPolyline line;
    Complex cross;
    std::string stroke_cross;
  };
  std::pair<double, double> map(Complex z, double dx) const {
    const double x = std::clamp(z.real(), xmin_ - 1e3, xmax_ + 1e3);
    const double y = std::clamp(z.imag(), ymin_ - 1e3, ymax_ + 1e3);
    return {dx + (x - xmin_) * scale_, (ymax_ - y) * scale_};
  }
  double xmin_, xmax_, ymin_, ymax_, scale_;
  int panels_ = 1;
  std::vector<Item> items_;
};

/// Bounding box of point sets with a margin, never smaller than [-1.5, 1.5]^2.
inline std::array<double, 4> chart_bounds(const std::vector<std::vector<Complex>>& sets, double cap = 6.0) {
  double xmin = -1.5, xmax = 1.5, ymin = -1.5, ymax = 1.5;
  for (const auto& s : sets)
    for (const auto& z : s) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) continue;
      xmin = std::min(xmin, z.real());
      xmax = std::max(xmax, z.real());
      ymin = std::min(ymin, z.imag());
      ymax = std::max(ymax, z.imag());
    }
  const double m = 0.1 * std::max(xmax - xmin, ymax - ymin);
  return {std::max(xmin - m, -cap), std::min(xmax + m, cap), std::max(ymin - m, -cap), std::min(ymax + m, cap)};
}

inline std::vector<Complex> finite_points(const Curve& c) {
  std::vector<Complex> out;
  for (const auto& p : c.samples)
    if (!p.is_infinite()) out.push_back(p.value());
  return out;
}

// ---------------------------------------------------------------------------
// Files.

/// Writes to a sibling temporary and renames it into place.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorKind::invalid_argument, "cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) {
      os.close();
      std::filesystem::remove(tmp);
      fail(ErrorKind::invalid_argument, "failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace systole
