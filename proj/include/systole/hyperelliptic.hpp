#pragma once

// Ovalless real hyperelliptic surfaces w^2 = -P(z), P monic of degree 2g+2
// with real coefficients and no real roots; lifts of chart loops through the
// double cover (z, w) -> z.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "systole/polyloop.hpp"

namespace systole {

using Polynomial = std::vector<double>;  // highest degree first

inline Complex poly_eval(const std::vector<Complex>& c, Complex z) {
  Complex acc = 0.0;
  for (const auto& a : c) acc = acc * z + a;
  return acc;
}

inline Complex poly_eval(const Polynomial& c, Complex z) {
  Complex acc = 0.0;
  for (double a : c) acc = acc * z + a;
  return acc;
}

/// Simultaneous root finding (Aberth-Ehrlich) followed by Newton polishing.
inline std::vector<Complex> polynomial_roots(const Polynomial& coeffs) {
  const std::size_t n = coeffs.size() - 1;
  std::vector<Complex> c(coeffs.begin(), coeffs.end());
  for (auto& a : c) a /= coeffs.front();
  std::vector<Complex> dc;
  for (std::size_t i = 0; i < n; ++i) dc.push_back(c[i] * static_cast<double>(n - i));
  // Cauchy bound for the initial circle.
  double bound = 0.0;
  for (std::size_t i = 1; i <= n; ++i) bound = std::max(bound, std::abs(c[i]));
  bound = 1.0 + bound;
  std::vector<Complex> z(n);
  for (std::size_t k = 0; k < n; ++k) z[k] = std::polar(0.5 * bound, kTwoPi * (k + 0.25) / n + 0.4);
  for (int iter = 0; iter < 500; ++iter) {
    double change = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const Complex p = poly_eval(c, z[k]);
      const Complex dp = poly_eval(dc, z[k]);
      if (p == Complex(0.0)) continue;
      const Complex ratio = p / dp;
      Complex sum = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != k) sum += 1.0 / (z[k] - z[j]);
      const Complex step = ratio / (1.0 - ratio * sum);
      z[k] -= step;
      change = std::max(change, std::abs(step) / std::max(1.0, std::abs(z[k])));
    }
    if (change < 1e-15) break;
  }
  for (auto& r : z)
    for (int it = 0; it < 4; ++it) {
      const Complex dp = poly_eval(dc, r);
      if (std::abs(dp) == 0.0) break;
      r -= poly_eval(c, r) / dp;
    }
  return z;
}

/// Double cover w^2 = Q(z) over the chart, Q = sign * prod (z - root), or a
/// real polynomial when one is supplied (then roots are informational).
class RamifiedCover {
 public:
  RamifiedCover(std::vector<Complex> roots, double sign) : roots_(std::move(roots)), sign_(sign) {}
  RamifiedCover(std::vector<Complex> roots, double sign, Polynomial poly)
      : roots_(std::move(roots)), sign_(sign), poly_(std::move(poly)) {}

  /// Abstract cover branched over a labeled point set.
  static RamifiedCover over(const PointSet& S) {
    std::vector<Complex> r;
    for (const auto& s : S) r.push_back(s.z);
    return {std::move(r), 1.0};
  }

  const std::vector<Complex>& roots() const { return roots_; }

  Complex q(Complex z) const {
    if (!poly_.empty()) return sign_ * poly_eval(poly_, z);
    Complex acc = sign_;
    for (const auto& r : roots_) acc *= (z - r);
    return acc;
  }

  /// Principal square root: nonnegative real part, ties to nonnegative imaginary part.
  Complex principal_branch(Complex z) const {
    Complex w = std::sqrt(q(z));
    if (w.real() < 0.0 || (w.real() == 0.0 && w.imag() < 0.0)) w = -w;
    return w;
  }

  double min_root_distance(Complex p, Complex a) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& r : roots_) d = std::min(d, point_segment_distance(r, p, a));
    return d;
  }

  /// Continues w along the straight segment p -> a. Steps are small enough
  /// that arg Q changes by less than pi/2; each new value takes the sign
  /// nearest the previous one.
  Complex continue_segment(Complex p, Complex a, Complex w) const {
    const double len = std::abs(a - p);
    if (len == 0.0) return w;
    double t = 0.0;
    Complex z = p;
    while (t < 1.0) {
      // Each factor (z - r) turns by at most h / dist(r, step) over a step of length h.
      double h = (1.0 - t) * len;
      for (;;) {
        const Complex z1 = p + std::min(1.0, t + h / len) * (a - p);
        double turn = 0.0;
        for (const auto& r : roots_) turn += h / point_segment_distance(r, z, z1);
        if (turn < 0.5 * kPi || h < 1e-14 * len) break;
        h *= 0.5;
      }
      t = std::min(1.0, t + h / len);
      const Complex z1 = p + t * (a - p);
      Complex w1 = std::sqrt(q(z1));
      if (std::abs(w1 - w) > std::abs(w1 + w)) w1 = -w1;
      w = w1;
      z = z1;
    }
    return w;
  }

 private:
  std::vector<Complex> roots_;
  double sign_ = 1.0;
  Polynomial poly_;
};

struct SheetState {
  Complex branch;
  /// +1 or -1 when the point is at infinity: w ~ sigma * i * z^(g+1).
  std::optional<int> at_infinity;
};

struct SurfacePoint {
  Complex z;
  Complex w;
};

class HyperellipticSurface {
 public:
  const Polynomial& coeffs() const { return coeffs_; }
  int genus() const { return genus_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  /// Upper half-plane roots (ordered by |w| then argument), followed by their conjugates in the same order.
  const std::vector<Complex>& weierstrass_roots() const { return roots_; }
  std::vector<Complex> upper_roots() const { return {roots_.begin(), roots_.begin() + genus_ + 1}; }

  Complex minus_p(Complex z) const { return -poly_eval(coeffs_, z); }

  RamifiedCover cover() const {
    return RamifiedCover(roots_, -1.0, coeffs_);
  }

  // Involutions.
  static SurfacePoint J(const SurfacePoint& p) { return {p.z, -p.w}; }
  static SurfacePoint tau(const SurfacePoint& p) { return {std::conj(p.z), std::conj(p.w)}; }
  static Complex tau0(Complex z) { return std::conj(z); }
  static int J_sheet(int sigma) { return -sigma; }
  static int tau_sheet(int sigma) { return -sigma; }

  /// Sheet label of a point over large |z|: sign of Re(w / (i z^(g+1))).
  int infinity_sheet(Complex z, Complex w) const {
    const Complex ratio = w / (Complex(0.0, 1.0) * std::pow(z, genus_ + 1));
    return ratio.real() >= 0.0 ? 1 : -1;
  }

  friend HyperellipticSurface build_surface(const Polynomial& coeffs);

 private:
  Polynomial coeffs_;
  int genus_ = 0;
  std::vector<Complex> roots_;
};

inline constexpr double kRealRootTolerance = 1e-9;
inline constexpr double kRootSeparation = 1e-8;

inline HyperellipticSurface build_surface(const Polynomial& coeffs_in) {
  Polynomial coeffs = coeffs_in;
  if (coeffs.empty()) fail(ErrorKind::not_monic, "empty coefficient list");
  for (double c : coeffs)
    if (!std::isfinite(c)) fail(ErrorKind::config_invalid, "non-finite coefficient");
  if (std::abs(coeffs.front() - 1.0) > 1e-12) fail(ErrorKind::not_monic, "leading coefficient must be 1");
  const int deg = static_cast<int>(coeffs.size()) - 1;
  if (deg % 2 != 0) fail(ErrorKind::odd_degree, "degree " + std::to_string(deg) + " is odd");
  const int g = (deg - 2) / 2;
  if (g <= 0 || g % 2 != 0) fail(ErrorKind::odd_genus, "genus " + std::to_string(g) + " is not a positive even number");

  auto roots = polynomial_roots(coeffs);
  for (const auto& r : roots)
    if (std::abs(r.imag()) <= kRealRootTolerance * std::max(1.0, std::abs(r)))
      fail(ErrorKind::real_root_found, "real root near " + std::to_string(r.real()));
  for (std::size_t i = 0; i < roots.size(); ++i)
    for (std::size_t j = i + 1; j < roots.size(); ++j)
      if (std::abs(roots[i] - roots[j]) < kRootSeparation) fail(ErrorKind::repeated_root, "roots closer than 1e-8");

  // Pair conjugates: keep upper roots, replace lower ones by exact conjugates.
  std::vector<Complex> upper;
  for (const auto& r : roots)
    if (r.imag() > 0.0) upper.push_back(r);
  if (static_cast<int>(upper.size()) != g + 1) fail(ErrorKind::real_root_found, "roots are not in conjugate pairs");
  std::sort(upper.begin(), upper.end(), [](Complex a, Complex b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (std::abs(ma - mb) > 1e-12 * std::max(1.0, ma)) return ma < mb;
    return std::arg(a) < std::arg(b);
  });
  HyperellipticSurface X;
  X.coeffs_ = std::move(coeffs);
  X.genus_ = g;
  X.roots_ = upper;
  for (const auto& r : upper) X.roots_.push_back(std::conj(r));
  return X;
}

inline std::vector<ChartPoint> ramification_points(const HyperellipticSurface& X) {
  std::vector<ChartPoint> out;
  for (const auto& r : X.weierstrass_roots()) out.emplace_back(r);
  return out;
}

inline PointSet labeled_upper_roots(const HyperellipticSurface& X) {
  PointSet S;
  const auto up = X.upper_roots();
  for (std::size_t i = 0; i < up.size(); ++i) S.push_back({static_cast<int>(i), up[i]});
  return S;
}

inline constexpr double kRootClearance = 1e-6;

inline void check_clear_of_roots(const RamifiedCover& cover, const PolyLoop& loop) {
  for (std::size_t k = 0; k < loop.size(); ++k)
    if (cover.min_root_distance(loop.at(k), loop.at(k + 1)) < kRootClearance)
      fail(ErrorKind::too_close_to_root, "loop passes within 1e-6 of a root");
}

/// Branch values at every vertex (from the basepoint) and the final value after closing.
inline std::vector<Complex> continue_along(const RamifiedCover& cover, const PolyLoop& loop, Complex start) {
  check_clear_of_roots(cover, loop);
  std::vector<Complex> w{start};
  for (std::size_t k = 0; k < loop.size(); ++k) w.push_back(cover.continue_segment(loop.at(k), loop.at(k + 1), w.back()));
  return w;
}

inline SheetState continue_sqrt(const RamifiedCover& cover, const PolyLoop& loop, const SheetState& start) {
  return {continue_along(cover, loop, start.branch).back(), std::nullopt};
}

inline SheetState continue_sqrt(const HyperellipticSurface& X, const PolyLoop& loop, const SheetState& start) {
  return continue_sqrt(X.cover(), loop, start);
}

/// Branch at loop parameter s, continuing from the principal branch at the basepoint.
inline Complex lift_at(const RamifiedCover& cover, const PolyLoop& loop, const std::vector<Complex>& vertex_branches,
                       double s) {
  const std::size_t k = static_cast<std::size_t>(std::floor(s));
  return cover.continue_segment(loop.at(k), loop.point(s), vertex_branches[k]);
}

/// True iff the number of roots with odd winding number is even.
inline bool lift_closes(const RamifiedCover& cover, const PolyLoop& loop) {
  check_clear_of_roots(cover, loop);
  int odd = 0;
  for (const auto& r : cover.roots())
    if (winding_number(loop, r) % 2 != 0) ++odd;
  return odd % 2 == 0;
}

inline bool lift_closes(const HyperellipticSurface& X, const PolyLoop& loop) { return lift_closes(X.cover(), loop); }

/// Continuation verdict: the branch returns to itself.
inline bool continuation_closes(const RamifiedCover& cover, const PolyLoop& loop) {
  const Complex w0 = cover.principal_branch(loop.basepoint());
  const Complex w1 = continue_sqrt(cover, loop, {w0, std::nullopt}).branch;
  return std::abs(w1 - w0) < std::abs(w1 + w0);
}

}  // namespace systole
