#pragma once

// The football orbifold AF(pi, pi): the round sphere modulo rotation by pi
// about the polar axis, realized on the chart by D(w) = w^2.

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "systole/conformal_metric.hpp"
#include "systole/sphere_core.hpp"

namespace systole {

/// mu(t) = 4t(1+t)^2 / (1+t^2)^2; g_AF = g0 / mu(|z|).
inline double football_mu(double t) {
  const double a = 1.0 + t, b = 1.0 + t * t;
  return 4.0 * t * a * a / (b * b);
}

/// Factor of g_AF against g0 at chart radius r: (1 + r^2) / (2 sqrt(r) (1 + r)).
inline double af_factor_radius(double r) { return (1.0 + r * r) / (2.0 * std::sqrt(r) * (1.0 + r)); }

inline double af_factor(const ChartPoint& z) {
  if (z.is_infinite()) fail(ErrorKind::singular_point, "football factor is singular at infinity");
  const double r = std::abs(z.value());
  if (r == 0.0) fail(ErrorKind::singular_point, "football factor is singular at 0");
  return af_factor_radius(r);
}

/// g_AF as a conformal factor with inverse-sqrt points at 0 and infinity.
/// Evaluating exactly at a cone point returns +infinity.
inline ConformalFactor football_metric() {
  return ConformalFactor(
      [](const ChartPoint& z) {
        if (z.is_infinite()) return std::numeric_limits<double>::infinity();
        const double r = std::abs(z.value());
        if (r == 0.0 || !std::isfinite(r)) return std::numeric_limits<double>::infinity();
        return af_factor_radius(r);
      },
      {{Complex(0.0), SingularityKind::inverse_sqrt}, {ChartPoint::infinity(), SingularityKind::inverse_sqrt}},
      {SphereInvolution::equatorial_inversion(), SphereInvolution::conjugation(), SphereInvolution::deck_rotation()});
}

inline ChartPoint double_cover_map(const ChartPoint& w) {
  if (w.is_infinite()) return w;
  const Complex z = w.value();
  return z * z;
}

/// Round stretch of D: 2|w|(1+|w|^2) / (1+|w|^4), the reciprocal of af(w^2).
inline double double_cover_stretch(Complex w) {
  const double a = std::abs(w);
  return 2.0 * a * (1.0 + a * a) / (1.0 + a * a * a * a);
}

/// Factor on AF (relative to g_AF) pulled back to the cover: f(w^2), relative to g0.
inline ConformalFactor pullback_to_cover(const ConformalFactor& f_on_af) {
  std::vector<Singularity> sings;
  for (const auto& s : f_on_af.singularities()) {
    if (s.location.is_infinite() || s.location.value() == Complex(0.0)) {
      sings.push_back(s);
      continue;
    }
    const Complex r = std::sqrt(s.location.value());
    sings.push_back({r, s.kind});
    sings.push_back({-r, s.kind});
  }
  if (f_on_af.constant_value()) return f_on_af;
  return ConformalFactor([f_on_af](const ChartPoint& w) { return f_on_af(double_cover_map(w)); },
                         merge_singularities(std::move(sings)), {SphereInvolution::deck_rotation()});
}

/// The metric f^2 g_AF written as a factor against g0: f * af.
inline ConformalFactor football_product(const ConformalFactor& f_on_af) {
  const ConformalFactor af = football_metric();
  std::vector<Singularity> sings = af.singularities();
  for (const auto& s : f_on_af.singularities()) sings.push_back(s);
  return ConformalFactor([f_on_af, af](const ChartPoint& z) { return f_on_af(z) * af(z); },
                         merge_singularities(std::move(sings)));
}

/// AF(C, w): the football factor transported by the Mobius map sending C to
/// the unit circle and w to 0. Cone points sit at w and at its partner across C.
inline ConformalFactor af_pullback(const GeneralizedCircle& C, const ChartPoint& w) {
  return pullback_by_mobius(football_metric(), mobius_normalize(C, w));
}

// ---------------------------------------------------------------------------
// Figure-eight geodesics.

/// Chart position and chart velocity of the stereographic image of a great circle.
inline std::pair<Complex, Complex> circle_chart_jet(const GreatCircle& g, double t) {
  const Vec3 v = g.at(t);
  const Vec3 dv = g.tangent(t);
  const double rho2 = v.x * v.x + v.y * v.y;
  // 1 - v_z, computed without cancellation in the northern hemisphere.
  const double m = v.z > 0.0 ? rho2 / (1.0 + v.z) : 1.0 - v.z;
  const Complex xy(v.x, v.y), dxy(dv.x, dv.y);
  return {xy / m, dxy / m + xy * (dv.z / (m * m))};
}

struct FootballGeodesic {
  GreatCircle source;
  /// D o gamma sampled at equal round parameter steps, starting at the self-intersection.
  Curve image_samples;
  std::optional<ChartPoint> self_intersection;
  /// Parameter of the source where hoop 0 (the one in |z| <= 1) begins; hoop 0
  /// covers [split, split + pi], hoop 1 the other half.
  double split_parameter = 0.0;
};

/// Splits the source at its intersections with its deck-rotated copy. Those
/// are the horizontal points +-u of the source; D(u) lies on the unit circle.
inline FootballGeodesic figure_eight_geodesic(const GreatCircle& source, int samples = 256) {
  const Vec3 n = source.normal();
  if (std::abs(n.z) < 1e-9) fail(ErrorKind::through_poles, "source great circle passes through the poles");
  if (std::hypot(n.x, n.y) < 1e-9) fail(ErrorKind::deck_invariant, "source is the equator of the cover");
  const Vec3 rn{-n.x, -n.y, n.z};
  const Vec3 u = normalized(cross(n, rn));
  double t0 = source.parameter_of(u);
  // Hoop 0 is the southern half: the midpoint after t0 must have negative height.
  if (source.at(t0 + 0.5 * kPi).z > 0.0) t0 += kPi;
  t0 = std::remainder(t0, kTwoPi);
  FootballGeodesic out;
  out.source = source;
  out.split_parameter = t0;
  out.self_intersection = double_cover_map(project(SpherePoint(source.at(t0))));
  out.image_samples.closed = true;
  for (int i = 0; i < samples; ++i) {
    out.image_samples.samples.push_back(double_cover_map(project(SpherePoint(source.at(t0 + kTwoPi * i / samples)))));
  }
  return out;
}

/// g_AF-length of a parameter range of the image, integrating af(c) |c'|_{g0}
/// for c = D o gamma with the chart derivative computed by the chain rule.
inline double football_image_length(const GreatCircle& source, double t_begin, double t_end, double tol = 1e-12) {
  const auto integrand = [&](double t) {
    const auto [w, dw] = circle_chart_jet(source, t);
    const Complex c = w * w;
    const Complex dc = 2.0 * w * dw;
    return af_factor_radius(std::abs(c)) * 2.0 * std::abs(dc) / (1.0 + std::norm(c));
  };
  return integrate_smooth(integrand, t_begin, t_end, tol, 15).value;
}

inline std::array<double, 2> hoop_lengths(const FootballGeodesic& g) {
  const double t0 = g.split_parameter;
  return {football_image_length(g.source, t0, t0 + kPi), football_image_length(g.source, t0 + kPi, t0 + kTwoPi)};
}

/// f-lengths of the two hoops for a factor on AF, computed on the cover.
inline std::array<double, 2> hoop_lengths(const ConformalFactor& cover_factor, const FootballGeodesic& g,
                                           double tol = 1e-10) {
  const double t0 = g.split_parameter;
  const auto piece = [&](double a, double b) {
    if (auto k = cover_factor.constant_value()) return *k * (b - a);
    const auto integrand = [&](double t) {
      const double v = cover_factor.at(g.source.at(t));
      return std::isfinite(v) ? v : 0.0;
    };
    std::vector<double> cuts{a, b};
    bool near = false;
    for (const auto& s : cover_factor.singularities()) {
      const Vec3 sp = s.point();
      if (g.source.distance_to(sp) >= 0.5) continue;
      near = near || s.kind == SingularityKind::inverse_sqrt;
      double t = g.source.parameter_of(sp);
      while (t < a) t += kTwoPi;
      while (t > b) t -= kTwoPi;
      if (t > a && t < b) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      total += near ? integrate_endpoint_singular(integrand, cuts[i], cuts[i + 1], tol).value
                    : integrate_smooth(integrand, cuts[i], cuts[i + 1], tol).value;
    return total;
  };
  return {piece(t0, t0 + kPi), piece(t0 + kPi, t0 + kTwoPi)};
}

/// Chart polyline of one hoop (0: inside the unit disk, 1: outside), closed
/// at the self-intersection.
inline std::vector<Complex> hoop_polyline(const FootballGeodesic& g, int hoop, int samples) {
  std::vector<Complex> out;
  const double t0 = g.split_parameter + (hoop == 0 ? 0.0 : kPi);
  for (int i = 0; i < samples; ++i) {
    const ChartPoint w = project(g.source.point(t0 + kPi * i / samples));
    out.push_back(double_cover_map(w).value());
  }
  return out;
}

}  // namespace systole
