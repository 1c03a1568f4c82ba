#pragma once

// systole-lab: configuration, subcommands and reports.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "systole/expression.hpp"
#include "systole/io.hpp"

namespace systole {

inline constexpr const char* kReportSchema = "systole-lab/1";

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigInvalid = 2;
inline constexpr int kExitComputationFailed = 3;

struct FactorSpec {
  std::string expression = "1";
  std::optional<std::string> grid_path;
  std::vector<Singularity> singularities;
};

struct RunConfig {
  Polynomial polynomial{1, 0, 0, 0, 0, 0, 1};
  FactorSpec factor;
  std::optional<std::size_t> samples;
  std::uint64_t seed = 1;
  int quadrature_level = 7;
  std::optional<std::string> out;
  std::optional<std::string> svg;
  std::string instance = "canonical";
  int size_S = 3;
  int figures = 3;
  std::vector<Vec3> circles;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& what) { fail(ErrorKind::config_invalid, what); }

inline Complex complex_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  config_error(where + ": expected a number or [re, im]");
}

inline std::uint64_t uint_from_json(const Json& j, const std::string& key, std::uint64_t lo, std::uint64_t hi) {
  if (!j.is_number_integer() || (j.is_number_integer() && j.get<std::int64_t>() < 0))
    config_error(key + ": expected a nonnegative integer");
  const auto v = j.get<std::uint64_t>();
  if (v < lo || v > hi) config_error(key + ": out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return v;
}

inline std::string string_from_json(const Json& j, const std::string& key) {
  if (!j.is_string()) config_error(key + ": expected a string");
  return j.get<std::string>();
}

inline void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [k, _] : obj.items())
    if (!allowed.count(k)) config_error(where + ": unknown key '" + k + "'");
}

inline FactorSpec factor_from_json(const Json& j) {
  FactorSpec spec;
  if (j.is_string()) {
    spec.expression = j.get<std::string>();
    return spec;
  }
  if (!j.is_object()) config_error("factor: expected a string or an object");
  reject_unknown(j, {"expression", "grid", "singularities"}, "factor");
  if (j.contains("expression") == j.contains("grid")) config_error("factor: give exactly one of expression, grid");
  if (j.contains("expression")) spec.expression = string_from_json(j["expression"], "factor.expression");
  if (j.contains("grid")) spec.grid_path = string_from_json(j["grid"], "factor.grid");
  if (j.contains("singularities")) {
    if (!j["singularities"].is_array()) config_error("factor.singularities: expected an array");
    for (const auto& s : j["singularities"]) {
      if (!s.is_object()) config_error("factor.singularities: expected objects");
      reject_unknown(s, {"at", "kind"}, "factor.singularities");
      if (!s.contains("at") || !s.contains("kind")) config_error("factor.singularities: need at and kind");
      const std::string kind = string_from_json(s["kind"], "factor.singularities.kind");
      Singularity sg;
      if (kind == "inverse-sqrt")
        sg.kind = SingularityKind::inverse_sqrt;
      else if (kind == "zero")
        sg.kind = SingularityKind::zero;
      else
        config_error("factor.singularities.kind: expected inverse-sqrt or zero");
      if (s["at"].is_string() && s["at"].get<std::string>() == "infinity")
        sg.location = ChartPoint::infinity();
      else
        sg.location = complex_from_json(s["at"], "factor.singularities.at");
      spec.singularities.push_back(sg);
    }
  }
  return spec;
}

}  // namespace detail

/// Parses and validates a config document; unknown keys are rejected.
inline RunConfig parse_config(const Json& j) {
  using namespace detail;
  if (!j.is_object()) config_error("config must be a JSON object");
  reject_unknown(j,
                 {"polynomial", "factor", "samples", "seed", "quadrature_level", "out", "svg", "instance", "size_S",
                  "figures", "circles"},
                 "config");
  RunConfig c;
  if (j.contains("polynomial")) {
    if (!j["polynomial"].is_array() || j["polynomial"].empty()) config_error("polynomial: expected a nonempty array");
    c.polynomial.clear();
    for (const auto& x : j["polynomial"]) {
      if (!x.is_number()) config_error("polynomial: coefficients must be real numbers");
      c.polynomial.push_back(x.get<double>());
    }
  }
  if (j.contains("factor")) c.factor = factor_from_json(j["factor"]);
  if (j.contains("samples")) c.samples = uint_from_json(j["samples"], "samples", 1, 10000000);
  if (j.contains("seed")) c.seed = uint_from_json(j["seed"], "seed", 0, UINT64_MAX);
  if (j.contains("quadrature_level"))
    c.quadrature_level = static_cast<int>(uint_from_json(j["quadrature_level"], "quadrature_level", 3, 10));
  if (j.contains("out")) c.out = string_from_json(j["out"], "out");
  if (j.contains("svg")) c.svg = string_from_json(j["svg"], "svg");
  if (j.contains("instance")) {
    c.instance = string_from_json(j["instance"], "instance");
    if (c.instance != "canonical" && c.instance != "chain" && c.instance != "random")
      config_error("instance: expected canonical, chain or random");
  }
  if (j.contains("size_S")) c.size_S = static_cast<int>(uint_from_json(j["size_S"], "size_S", 1, 15));
  if (j.contains("figures")) c.figures = static_cast<int>(uint_from_json(j["figures"], "figures", 1, 64));
  if (j.contains("circles")) {
    if (!j["circles"].is_array()) config_error("circles: expected an array of normals");
    for (const auto& n : j["circles"]) {
      if (!n.is_array() || n.size() != 3 || !n[0].is_number() || !n[1].is_number() || !n[2].is_number())
        config_error("circles: each normal is [x, y, z]");
      const Vec3 v{n[0].get<double>(), n[1].get<double>(), n[2].get<double>()};
      if (norm(v) < 1e-12) config_error("circles: zero normal");
      c.circles.push_back(v);
    }
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config_invalid, "cannot open config " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    fail(ErrorKind::config_invalid, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c = parse_config(j);
  // Grid files are looked up next to the config; report paths stay relative to the working directory.
  if (c.factor.grid_path && std::filesystem::path(*c.factor.grid_path).is_relative())
    c.factor.grid_path = (std::filesystem::path(path).parent_path() / *c.factor.grid_path).string();
  return c;
}

inline Json to_json(const RunConfig& c) {
  Json poly = Json::array();
  for (double x : c.polynomial) poly.push_back(x);
  Json factor{{"expression", c.factor.grid_path ? Json(nullptr) : Json(c.factor.expression)},
              {"grid", c.factor.grid_path ? Json(*c.factor.grid_path) : Json(nullptr)}};
  Json sings = Json::array();
  for (const auto& s : c.factor.singularities)
    sings.push_back(Json{{"at", to_json(s.location)},
                         {"kind", s.kind == SingularityKind::inverse_sqrt ? "inverse-sqrt" : "zero"}});
  factor["singularities"] = sings;
  Json circles = Json::array();
  for (const auto& v : c.circles) circles.push_back(to_json(v));
  return Json{{"polynomial", poly},
              {"factor", factor},
              {"samples", c.samples ? Json(*c.samples) : Json(nullptr)},
              {"seed", c.seed},
              {"quadrature_level", c.quadrature_level},
              {"instance", c.instance},
              {"size_S", c.size_S},
              {"figures", c.figures},
              {"circles", circles}};
}

inline ConformalFactor make_factor(const FactorSpec& spec) {
  if (spec.grid_path) return grid_factor_from_file(*spec.grid_path);
  return expression_factor(spec.expression, spec.singularities);
}

/// Surface construction failures are configuration errors.
inline HyperellipticSurface make_surface(const Polynomial& p) {
  try {
    return build_surface(p);
  } catch (const Error& e) {
    fail(ErrorKind::config_invalid, e.what());
  }
}

struct CommandOutput {
  Json results;
  std::optional<std::string> svg;
  bool ok = true;
  std::vector<std::string> failures;
};

// ---------------------------------------------------------------------------
// Subcommands.

inline CommandOutput cmd_verify(const RunConfig& c) {
  const HyperellipticSurface X = make_surface(c.polynomial);
  const ConformalFactor f = make_factor(c.factor);
  const AdmissibilityReport adm = check_admissible(f);
  if (!adm.admissible) {
    std::string d;
    for (const auto& s : adm.diagnostics) d += (d.empty() ? "" : "; ") + s;
    fail(ErrorKind::config_invalid, "factor is not admissible: " + d);
  }
  const PuCertificate cert = verify_relative_pu(f, X, c.samples.value_or(20000), c.seed, c.quadrature_level);
  CommandOutput out;
  out.results = Json{{"surface", to_json(X)},
                     {"certificate", to_json(cert)},
                     {"relative_systole_estimate", cert.path_length},
                     {"relative_systole_ratio", cert.ratio}};

  std::vector<std::vector<Complex>> sets{cert.loop.vertices};
  for (const auto& h : cert.hoops) sets.push_back(h.loop.vertices);
  const auto b = chart_bounds(sets);
  SvgFigure fig(b[0], b[1], b[2], b[3], 600.0 / std::max(b[1] - b[0], b[3] - b[2]));
  fig.add_real_axis();
  fig.add_unit_circle();
  for (const auto& h : cert.hoops) fig.add_polyline({h.loop.vertices, true, "#6f9fd8", 1.0});
  fig.add_polyline({cert.loop.vertices, true, "#c0392b", 2.0});
  for (const auto& r : X.weierstrass_roots()) fig.add_cross(r, "black");
  out.svg = fig.str();
  return out;
}

inline CommandOutput cmd_football(const RunConfig& c) {
  const ConformalFactor f = make_factor(c.factor);
  const std::size_t samples = c.samples.value_or(20000);
  const FootballSearchResult best = find_short_football_geodesic(f, samples, c.seed, c.quadrature_level);
  const ConformalFactor cover = pullback_to_cover(f);

  std::vector<GreatCircle> sources;
  if (!c.circles.empty()) {
    for (const auto& n : c.circles) sources.emplace_back(normalized(n));
  } else {
    sources = sample_great_circles(static_cast<std::size_t>(c.figures), c.seed);
  }
  CommandOutput out;
  Json figures = Json::array();
  std::vector<FootballGeodesic> drawn;
  for (const auto& g : sources) {
    try {
      const FootballGeodesic geo = figure_eight_geodesic(g);
      const auto h = hoop_lengths(cover, geo);
      figures.push_back(Json{{"source", to_json(g)},
                             {"self_intersection", to_json(*geo.self_intersection)},
                             {"hoop_lengths", {h[0], h[1]}},
                             {"figure_length", h[0] + h[1]}});
      drawn.push_back(geo);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::through_poles && e.kind() != ErrorKind::deck_invariant) throw;
      figures.push_back(Json{{"source", to_json(g)}, {"skipped", std::string(kind_name(e.kind()))}, {"note", e.what()}});
    }
  }
  out.results = Json{{"figures", figures}, {"shortest", to_json(best)}};

  SvgFigure fig(-3.0, 3.0, -3.0, 3.0, 100.0);
  fig.add_unit_circle();
  for (const auto& geo : drawn) fig.add_polyline({finite_points(geo.image_samples), true, "#2e86c1", 1.2});
  fig.add_polyline({finite_points(best.geodesic.image_samples), true, "#c0392b", 2.0});
  fig.add_cross(Complex(0.0), "black");
  out.svg = fig.str();
  return out;
}

inline CommandOutput cmd_surgery_demo(const RunConfig& c) {
  if (c.size_S % 2 == 0) fail(ErrorKind::config_invalid, "size_S must be odd");
  const ConformalFactor f = make_factor(c.factor);
  SurgeryInstance inst;
  if (c.instance == "canonical") {
    if (c.size_S != 3) fail(ErrorKind::config_invalid, "the canonical instance has size_S = 3");
    inst = canonical_instance(f);
  } else if (c.instance == "chain") {
    inst = chain_instance(c.size_S, c.seed, f);
  } else {
    inst = random_instance(c.size_S, c.seed, f);
  }
  const OddLoopResult r = find_odd_loop(inst.loops, inst.S, inst.L, f);

  CommandOutput out;
  Json S = Json::array();
  for (const auto& s : inst.S) S.push_back(Json{{"id", s.id}, {"z", to_json(s.z)}});
  Json loops = Json::array();
  for (const auto& l : inst.loops) {
    Json jl = to_json(l);
    jl["profile"] = to_json(winding_profile(l, inst.S));
    loops.push_back(jl);
  }
  const WindingProfile prof = winding_profile(r.loop, inst.S);
  Json audits = Json::array();
  bool conserved = true;
  for (const auto& a : r.audits) {
    const bool ok = std::abs(a.input_total - a.output_total) <= 1e-9;
    conserved = conserved && ok;
    audits.push_back(Json{{"input_total", a.input_total}, {"output_total", a.output_total}, {"conserved", ok}});
  }
  const bool odd = prof.odd();
  const bool short_enough = *r.loop.metric_length <= inst.L + 1e-9;
  const bool few = r.surgeries <= (static_cast<int>(inst.S.size()) - 1) / 2;
  const bool lift_open = !lift_closes(RamifiedCover::over(inst.S), r.loop);
  out.results = Json{{"S", S},
                     {"L", inst.L},
                     {"loops", loops},
                     {"result", to_json(r.loop)},
                     {"result_profile", to_json(prof)},
                     {"surgeries", r.surgeries},
                     {"audits", audits},
                     {"trace", r.trace},
                     {"assertions",
                      {{"odd", odd},
                       {"length_within_bound", short_enough},
                       {"surgery_count_within_bound", few},
                       {"exchange_conserves_length", conserved},
                       {"lift_does_not_close", lift_open}}}};
  if (!odd) out.failures.push_back("result loop is even");
  if (!short_enough) out.failures.push_back("result loop longer than L");
  if (!few) out.failures.push_back("too many surgeries");
  if (!conserved) out.failures.push_back("exchange changed the combined length");
  if (!lift_open) out.failures.push_back("result lift closes");
  out.ok = out.failures.empty();

  std::vector<std::vector<Complex>> sets;
  for (const auto& l : inst.loops) sets.push_back(l.vertices);
  const auto b = chart_bounds(sets, 12.0);
  SvgFigure fig(b[0], b[1], std::min(b[2], -0.2), b[3], 480.0 / std::max(b[1] - b[0], b[3] - b[2]));
  fig.set_panels(2);
  for (int panel : {0, 1}) {
    fig.add_real_axis(panel);
    for (const auto& s : inst.S) fig.add_cross(s.z, "black", panel);
  }
  for (const auto& l : inst.loops) fig.add_polyline({l.vertices, true, "#2e86c1", 1.2}, 0);
  fig.add_polyline({r.loop.vertices, true, "#c0392b", 1.6}, 1);
  out.svg = fig.str();
  return out;
}

inline CommandOutput cmd_average(const RunConfig& c) {
  const ConformalFactor f = make_factor(c.factor);
  const std::size_t samples = c.samples.value_or(20000);
  const AveragingReport rep = fubini_check(f, samples, c.seed, c.quadrature_level);
  CommandOutput out;
  out.results = Json{{"fubini", to_json(rep)},
                     {"short_circle",
                      {{"circle", to_json(rep.best_circle)},
                       {"length", rep.best_length},
                       {"bound", kPi * rep.area},
                       {"delta", rep.delta + 1e-9},
                       {"bound_holds", rep.best_length * rep.best_length <= kPi * rep.area * (1.0 + rep.delta + 1e-9)}}}};
  if (is_antipodal_invariant(f)) {
    const SystoleEstimate rp2 = verify_pu_rp2(f, samples, c.seed, c.quadrature_level);
    out.results["projective_plane"] = to_json(rp2);
  } else {
    out.results["projective_plane"] = nullptr;
  }
  SvgFigure fig(-3.0, 3.0, -3.0, 3.0, 100.0);
  fig.add_unit_circle();
  fig.add_polyline({finite_points(great_circle_curve(rep.best_circle, 256)), true, "#c0392b", 2.0});
  out.svg = fig.str();
  return out;
}

inline CommandOutput cmd_check_surface(const RunConfig& c) {
  const HyperellipticSurface X = make_surface(c.polynomial);
  CommandOutput out;
  Json ram = Json::array();
  for (const auto& p : ramification_points(X)) ram.push_back(to_json(p));
  const auto& roots = X.weierstrass_roots();
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < roots.size(); ++i)
    for (std::size_t k = i + 1; k < roots.size(); ++k) sep = std::min(sep, std::abs(roots[i] - roots[k]));
  out.results = Json{{"surface", to_json(X)},
                     {"ramification_points", ram},
                     {"hemisphere_point_count", X.genus() + 1},
                     {"min_root_separation", sep}};
  SvgFigure fig(-3.0, 3.0, -3.0, 3.0, 100.0);
  fig.add_real_axis();
  fig.add_unit_circle();
  for (const auto& r : X.weierstrass_roots()) fig.add_cross(r, "black");
  out.svg = fig.str();
  return out;
}

// ---------------------------------------------------------------------------
// Entry point.

inline int exit_code_for(const Error& e) {
  return e.kind() == ErrorKind::config_invalid ? kExitConfigInvalid : kExitComputationFailed;
}

/// Runs one invocation. Reports go to --out (atomically) or to `out`;
/// diagnostics and wall time go to `err`.
inline int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"systole-lab: systolic inequality experiments on conformal spheres and hyperelliptic surfaces"};
  app.require_subcommand(1);
  std::optional<std::string> config_path, out_path, svg_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<int> level;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out_path, "report path (default: stdout)");
    sub->add_option("--svg", svg_path, "SVG figure path");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--samples", samples, "Monte Carlo sample count")->check(CLI::Range(1, 10000000));
    sub->add_option("--quadrature-level", level, "quadrature level")->check(CLI::Range(3, 10));
  };
  const std::vector<std::pair<std::string, std::string>> commands{
      {"verify", "certificate for the relative inequality on a hyperelliptic surface"},
      {"football", "figure-eight geodesics on the football"},
      {"surgery-demo", "odd-loop induction on a synthetic instance"},
      {"average", "great-circle averaging identity and short circles"},
      {"check-surface", "validate a polynomial and list ramification data"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "config-invalid: " << e.what() << "\n";
    return kExitConfigInvalid;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  const auto start = std::chrono::steady_clock::now();
  try {
    RunConfig cfg = config_path ? load_config(*config_path) : RunConfig{};
    if (seed) cfg.seed = *seed;
    if (samples) cfg.samples = *samples;
    if (level) cfg.quadrature_level = *level;
    if (out_path) cfg.out = *out_path;
    if (svg_path) cfg.svg = *svg_path;

    CommandOutput res;
    if (command == "verify")
      res = cmd_verify(cfg);
    else if (command == "football")
      res = cmd_football(cfg);
    else if (command == "surgery-demo")
      res = cmd_surgery_demo(cfg);
    else if (command == "average")
      res = cmd_average(cfg);
    else
      res = cmd_check_surface(cfg);

    Json report{{"schema", kReportSchema}, {"command", command}, {"config", to_json(cfg)}, {"results", res.results}};
    if (command == "verify") report["slack"] = res.results["certificate"]["slack"];
    report["status"] = res.ok ? "ok" : "failed";
    const std::string text = report.dump(2) + "\n";
    if (!res.ok) {
      for (const auto& f : res.failures) err << "computation-failed: " << f << "\n";
      return kExitComputationFailed;
    }
    if (cfg.svg && res.svg) write_file_atomic(*cfg.svg, *res.svg);
    if (cfg.out)
      write_file_atomic(*cfg.out, text);
    else
      out << text;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    err << "wall time: " << secs << " s\n";
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "computation-failed: " << e.what() << "\n";
    return kExitComputationFailed;
  }
}

}  // namespace systole
