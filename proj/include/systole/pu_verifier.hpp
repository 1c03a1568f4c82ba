#pragma once

// End-to-end certificate: a loop on the quotient sphere based on the fixed
// circle of tau0 whose lift joins a point of X to its tau-image, with
// length^2 / area(X) <= pi/4 (1 + delta).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "systole/conformal_metric.hpp"
#include "systole/football.hpp"
#include "systole/hyperelliptic.hpp"
#include "systole/integral_geometry.hpp"
#include "systole/loop_surgery.hpp"

namespace systole {

inline constexpr double kPerturbationSlack = 1e-5;
inline constexpr double kPerturbationSize = 1e-7;
/// Least chart distance from a selected hoop to any upper ramification point.
inline constexpr double kHoopClearance = 1e-4;

/// Conjugation average of f; invariant under z -> conj(z).
inline ConformalFactor symmetrize(const ConformalFactor& f, const HyperellipticSurface& /*X*/) {
  return average_metric(f, SphereInvolution::conjugation());
}

/// Factor of Phi^*(f^2 g0) against g0 on the cover, Phi = M^{-1} o D.
inline ConformalFactor cover_pullback(const ConformalFactor& f, const MobiusMap& M) {
  const MobiusMap Minv = M.inverse();
  std::vector<Singularity> sings{{Complex(0.0), SingularityKind::zero}, {ChartPoint::infinity(), SingularityKind::zero}};
  for (const auto& s : f.singularities()) {
    const ChartPoint m = M.apply(s.location);
    // At the branch points the stretch of D cancels an inverse-sqrt blow-up.
    if (m.is_infinite() || std::abs(m.value()) < 1e-9 || std::abs(m.value()) > 1e9) continue;
    const Complex r = std::sqrt(m.value());
    sings.push_back({r, s.kind});
    sings.push_back({-r, s.kind});
  }
  return ConformalFactor(
      [f, Minv](const ChartPoint& zeta) {
        if (zeta.is_infinite()) return 0.0;
        const Complex w = zeta.value();
        const ChartPoint d = w * w;
        return f(Minv.apply(d)) * mobius_round_stretch(Minv, d) * double_cover_stretch(w);
      },
      merge_singularities(std::move(sings)));
}

struct HoopResult {
  PolyLoop loop;
  Complex weierstrass;
  int hoop_id = 0;
  GreatCircle source;
  double smooth_length = 0.0;    // south hoop, from the cover integral
  double other_hoop_length = 0.0;
  double polyline_length = 0.0;  // chart polyline under f
  double figure_length = 0.0;
  double cover_area = 0.0;       // A_X
  double bound = 0.0;            // sqrt((pi/4) A_X)
  double delta_mc = 0.0;
  double delta_discretization = 0.0;
  int vertices = 0;
};

/// Half of a short figure-eight on AF(C, w) transported to the quotient sphere:
/// a loop in the closed upper half-plane, based on the real axis, winding once around w.
inline HoopResult short_loop_for_point(const ConformalFactor& f, const HyperellipticSurface& X, const ChartPoint& w,
                                       std::size_t samples, std::uint64_t seed, int hoop_id = 0,
                                       int quadrature_level = 7, std::optional<double> cover_area = std::nullopt) {
  if (w.is_infinite() || !(w.value().imag() > 0.0))
    fail(ErrorKind::invalid_argument, "short_loop_for_point needs a point in the open upper half-plane");
  const MobiusMap M = mobius_normalize(GeneralizedCircle::real_axis(), w);
  const MobiusMap Minv = M.inverse();
  const ConformalFactor cover = cover_pullback(f, M);
  HoopResult out;
  out.weierstrass = w.value();
  out.hoop_id = hoop_id;
  out.cover_area = cover_area ? *cover_area : 2.0 * metric_area(f, quadrature_level);
  out.bound = std::sqrt(0.25 * kPi * out.cover_area);

  const auto basepoint_of = [&](const GreatCircle& g) {
    const Vec3 n = g.normal();
    const Vec3 u = normalized(cross(n, Vec3{-n.x, -n.y, n.z}));
    return Minv.apply(double_cover_map(project(SpherePoint(u))));
  };
  const auto reject = [&](const GreatCircle& g) {
    const Vec3& n = g.normal();
    if (std::abs(n.z) < 1e-9 || std::hypot(n.x, n.y) < 1e-9) return true;
    const ChartPoint b = basepoint_of(g);
    return b.is_infinite() || std::abs(b.value()) > 1e4;
  };
  const auto circles = sample_generic_circles(cover, samples, seed, reject);
  std::vector<double> energy(samples), length(samples);
  parallel_for(samples, [&](std::size_t i) {
    energy[i] = circle_energy(cover, circles[i]);
    length[i] = circle_length(cover, circles[i]);
  });
  const SampleStats es = sample_stats(energy);
  out.delta_mc = es.mean > 0.0 ? 3.0 * es.standard_error / es.mean : 0.0;
  // Shortest sampled figure-eight whose hoop keeps clear of the ramification points.
  std::vector<std::size_t> order(samples);
  for (std::size_t i = 0; i < samples; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return length[a] < length[b]; });
  const PointSet roots = labeled_upper_roots(X);
  std::optional<std::size_t> best;
  for (std::size_t i : order) {
    std::vector<Complex> coarse;
    for (const auto& z : hoop_polyline(figure_eight_geodesic(circles[i]), 0, 512))
      coarse.push_back(Minv.apply(z).value());
    const PolyLoop probe = make_loop(std::move(coarse));
    bool clear = true;
    for (const auto& r : roots) clear = clear && distance_to_loop(probe, r.z) >= kHoopClearance;
    if (clear) {
      best = i;
      break;
    }
  }
  if (!best) fail(ErrorKind::no_generic_sample, "every sampled hoop passes too close to a ramification point");
  out.source = circles[*best];
  out.figure_length = length[*best];
  const FootballGeodesic geo = figure_eight_geodesic(out.source);
  const auto hoops = hoop_lengths(cover, geo);
  out.smooth_length = hoops[0];
  out.other_hoop_length = hoops[1];

  // Chart polyline of the hoop inside the unit disk, refined until its
  // length under f matches the smooth value.
  PolyLoop loop;
  double poly = 0.0;
  for (int n = 128;; n *= 2) {
    std::vector<Complex> verts;
    for (const auto& z : hoop_polyline(geo, 0, n)) verts.push_back(Minv.apply(z).value());
    verts[0] = Complex(verts[0].real(), 0.0);
    loop = make_loop(std::move(verts), hoop_id);
    poly = loop_length(f, loop);
    const double rel = std::abs(poly - out.smooth_length) / out.smooth_length;
    if (rel <= 1e-7 || n >= (1 << 15)) {
      out.delta_discretization = rel;
      out.vertices = n;
      break;
    }
  }
  if (winding_number(loop, w.value()) < 0) loop = reversed(loop);
  if (winding_number(loop, w.value()) != 1) fail(ErrorKind::certificate_invalid, "hoop does not wind once around w");
  loop.metric_length = poly;
  out.polyline_length = poly;
  out.loop = std::move(loop);
  return out;
}

struct Slack {
  double monte_carlo = 0.0;
  double perturbation = 0.0;
  double quadrature = 0.0;
  double discretization = 0.0;
  double total() const { return monte_carlo + perturbation + quadrature + discretization; }
};

struct ComponentCurve {
  int hoop_id = 0;
  Complex weierstrass;
  GreatCircle source;
  double hoop_length = 0.0;
};

struct PuCertificate {
  ChartPoint p;
  /// Projected loop based at p (chart polyline, segments tagged by hoop id).
  PolyLoop loop;
  Curve path;
  double path_length = 0.0;
  double area = 0.0;  // A_X = 2 * area(f_sym)
  double area_original = 0.0;
  double ratio = 0.0;
  double bound = kPi / 4.0;
  Slack slack;
  double delta = 0.0;
  std::vector<ComponentCurve> component_curves;
  std::vector<int> used_tags;
  bool lift_closes = true;
  bool continuation_negates = false;
  bool conjugate_used = false;
  int surgeries = 0;
  int perturbation_rounds = 0;
  std::vector<std::string> trace;
  std::vector<HoopResult> hoops;
};

inline PuCertificate verify_relative_pu(const ConformalFactor& f, const HyperellipticSurface& X, std::size_t samples,
                                        std::uint64_t seed, int quadrature_level = 7) {
  PuCertificate cert;
  const ConformalFactor fs = symmetrize(f, X);
  const AreaResult area_sym = metric_area_detailed(fs, quadrature_level);
  const AreaResult area_orig = metric_area_detailed(f, quadrature_level);
  cert.area = 2.0 * area_sym.value;
  cert.area_original = 2.0 * area_orig.value;

  const PointSet S = labeled_upper_roots(X);
  std::vector<PolyLoop> loops;
  double mc = 0.0, disc = 0.0;
  for (const auto& s : S) {
    HoopResult h = short_loop_for_point(fs, X, s.z, samples, seed + 7919ull * static_cast<std::uint64_t>(s.id), s.id,
                                        quadrature_level, cert.area);
    mc = std::max(mc, h.delta_mc);
    disc = std::max(disc, h.delta_discretization);
    loops.push_back(h.loop);
    cert.component_curves.push_back({s.id, s.z, h.source, h.smooth_length});
    cert.hoops.push_back(std::move(h));
  }

  DeterministicRng rng(seed ^ 0x9e3779b97f4a7c15ull);
  OddLoopResult odd;
  for (int round = 0;; ++round) {
    double L = 0.0;
    for (auto& l : loops) {
      if (!l.metric_length) l.metric_length = loop_length(fs, l);
      L = std::max(L, *l.metric_length);
    }
    try {
      odd = find_odd_loop(loops, S, L, fs);
      cert.perturbation_rounds = round;
      break;
    } catch (const Error& e) {
      const bool retry = e.kind() == ErrorKind::non_transverse_intersection || e.kind() == ErrorKind::point_on_loop ||
                         e.kind() == ErrorKind::too_close_to_root;
      if (!retry || round >= 8) throw;
      cert.trace.push_back(std::string("perturbing hoops after ") + e.what());
      for (auto& l : loops) l = perturbed(l, kPerturbationSize, rng);
    }
  }
  cert.surgeries = odd.surgeries;
  cert.trace.insert(cert.trace.end(), odd.trace.begin(), odd.trace.end());

  PolyLoop gamma = rebased(odd.loop);
  const double len = loop_length(f, gamma);
  const PolyLoop gbar = conjugated(gamma);
  const double len_bar = loop_length(f, gbar);
  cert.conjugate_used = len_bar < len;
  cert.loop = cert.conjugate_used ? gbar : gamma;
  cert.path_length = std::min(len, len_bar);
  cert.loop.metric_length = cert.path_length;
  cert.path = loop_curve(cert.loop);
  cert.p = cert.loop.basepoint();
  cert.ratio = cert.path_length * cert.path_length / cert.area;

  cert.slack.monte_carlo = mc;
  cert.slack.perturbation = kPerturbationSlack;
  cert.slack.quadrature = (area_sym.error / area_sym.value) + 1e-8;
  cert.slack.discretization = 2.0 * disc + disc * disc;
  cert.delta = cert.slack.total();

  cert.lift_closes = lift_closes(X, cert.loop);
  const RamifiedCover cov = X.cover();
  cert.continuation_negates = !continuation_closes(cov, cert.loop);
  std::vector<int> tags = cert.loop.arc_tags;
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  cert.used_tags = tags;

  if (!(cert.ratio <= cert.bound * (1.0 + cert.delta)))
    fail(ErrorKind::certificate_invalid, "ratio " + std::to_string(cert.ratio) + " exceeds pi/4 (1 + delta)");
  if (cert.lift_closes) fail(ErrorKind::certificate_invalid, "projected loop lifts to a closed loop");
  if (!cert.continuation_negates) fail(ErrorKind::certificate_invalid, "continuation does not negate the branch");
  if (static_cast<int>(cert.used_tags.size()) > X.genus() + 1)
    fail(ErrorKind::certificate_invalid, "loop uses more than g+1 hoops");
  if (std::abs(cert.p.value().imag()) > 0.0) fail(ErrorKind::certificate_invalid, "basepoint is off the fixed circle");
  return cert;
}

struct SystoleEstimate {
  double value = 0.0;
  Curve witness;
  std::string method;
  double area = 0.0;
  double bound = 0.0;  // right-hand side before slack
  double delta = 0.0;
  bool inequality_holds = false;
};

inline bool is_antipodal_invariant(const ConformalFactor& f, double tol = 1e-9) {
  for (const auto& p : fibonacci_points(200)) {
    bool near = false;
    for (const auto& s : f.singularities()) near = near || angle_between(p.v(), s.point()) < 1e-3;
    if (near) continue;
    const double a = f(p), b = f(antipode(p));
    if (std::abs(a - b) > tol * std::max(1.0, std::abs(a))) return false;
  }
  return true;
}

/// Projective-plane check: half of the shortest sampled great circle is a
/// noncontractible loop on S^2 / antipodal. sys^2 <= (pi/2) (area/2) (1 + delta).
inline SystoleEstimate verify_pu_rp2(const ConformalFactor& f, std::size_t samples = 20000, std::uint64_t seed = 1,
                                     int quadrature_level = 7) {
  if (!is_antipodal_invariant(f)) fail(ErrorKind::not_antipodal, "factor is not invariant under the antipodal map");
  const ShortCircleResult sc = find_short_great_circle(f, samples, seed, quadrature_level);
  SystoleEstimate est;
  est.value = 0.5 * sc.length;
  est.area = 0.5 * sc.area;
  est.bound = 0.5 * kPi * est.area;
  est.delta = sc.delta;
  est.method = "half of the shortest of " + std::to_string(samples) + " sampled great circles";
  for (int i = 0; i <= 64; ++i) est.witness.samples.push_back(project(sc.circle.point(kPi * i / 64)));
  est.inequality_holds = est.value * est.value <= est.bound * (1.0 + est.delta);
  return est;
}

/// Upper bound for the relative systole: the certificate path length.
inline SystoleEstimate relative_systole(const ConformalFactor& f, const HyperellipticSurface& X, std::size_t samples,
                                        std::uint64_t seed, int quadrature_level = 7) {
  const PuCertificate cert = verify_relative_pu(f, X, samples, seed, quadrature_level);
  SystoleEstimate est;
  est.value = cert.path_length;
  est.witness = cert.path;
  est.area = cert.area;
  est.bound = cert.bound * cert.area;
  est.delta = cert.delta;
  est.method = "certificate loop with non-closing lift";
  est.inequality_holds = est.value * est.value <= est.bound * (1.0 + est.delta);
  return est;
}

}  // namespace systole
