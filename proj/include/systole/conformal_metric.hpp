#pragma once

// Conformal metrics f^2 g0 on the sphere with finitely many declared singular
// points: area, length, energy, averaging under an involution, admissibility.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "systole/error.hpp"
#include "systole/parallel.hpp"
#include "systole/quadrature.hpp"
#include "systole/sphere_core.hpp"

namespace systole {

enum class SingularityKind { zero, inverse_sqrt };

struct Singularity {
  ChartPoint location;
  SingularityKind kind = SingularityKind::inverse_sqrt;

  Vec3 point() const { return unproject(location).v(); }
};

/// Nonnegative factor f of the metric f^2 g0, relative to the round metric.
class ConformalFactor {
 public:
  using Eval = std::function<double(const ChartPoint&)>;

  ConformalFactor() : ConformalFactor(constant(1.0)) {}

  ConformalFactor(Eval eval, std::vector<Singularity> singularities = {},
                  std::vector<SphereInvolution> symmetry_tags = {})
      : eval_(std::make_shared<const Eval>(std::move(eval))),
        singularities_(std::move(singularities)),
        symmetry_tags_(std::move(symmetry_tags)) {}

  static ConformalFactor constant(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorKind::invalid_argument, "constant factor must be positive");
    ConformalFactor f([c](const ChartPoint&) { return c; });
    f.constant_ = c;
    return f;
  }

  double operator()(const ChartPoint& z) const { return (*eval_)(z); }
  double operator()(const SpherePoint& p) const { return (*eval_)(project(p)); }
  double at(const Vec3& v) const { return (*eval_)(project(SpherePoint(v))); }

  const std::vector<Singularity>& singularities() const { return singularities_; }
  const std::vector<SphereInvolution>& symmetry_tags() const { return symmetry_tags_; }
  std::optional<double> constant_value() const { return constant_; }

  ConformalFactor scaled(double c) const {
    if (!(c > 0.0)) fail(ErrorKind::invalid_argument, "scale must be positive");
    auto inner = eval_;
    ConformalFactor out([inner, c](const ChartPoint& z) { return c * (*inner)(z); }, singularities_, symmetry_tags_);
    if (constant_) out.constant_ = c * *constant_;
    return out;
  }

  ConformalFactor with_symmetry(const SphereInvolution& F) const {
    ConformalFactor out = *this;
    out.symmetry_tags_.push_back(F);
    return out;
  }

 private:
  std::shared_ptr<const Eval> eval_;
  std::vector<Singularity> singularities_;
  std::vector<SphereInvolution> symmetry_tags_;
  std::optional<double> constant_;
};

/// Drops singularities within 1e-9 (round) of an earlier entry; inverse-sqrt wins.
inline std::vector<Singularity> merge_singularities(std::vector<Singularity> in) {
  std::vector<Singularity> out;
  for (const auto& s : in) {
    bool dup = false;
    for (auto& o : out) {
      if (angle_between(o.point(), s.point()) < 1e-9) {
        if (s.kind == SingularityKind::inverse_sqrt) o.kind = s.kind;
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Partition of unity around singular points.

struct SingularCap {
  Vec3 center;
  double radius = 0.3;
  GreatCircle frame;  // frame.e1(), frame.e2() span the tangent plane at center
};

inline std::vector<SingularCap> singular_caps(const std::vector<Singularity>& sings) {
  std::vector<SingularCap> caps;
  double min_sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sings.size(); ++i)
    for (std::size_t j = i + 1; j < sings.size(); ++j)
      min_sep = std::min(min_sep, angle_between(sings[i].point(), sings[j].point()));
  const double b = std::min(0.3, 0.45 * min_sep);
  if (!(b > 1e-9)) fail(ErrorKind::invalid_argument, "declared singularities coincide");
  for (const auto& s : sings) caps.push_back({s.point(), b, GreatCircle(s.point())});
  return caps;
}

/// Smooth step: 1 on [0, b/2], 0 on [b, inf), C-infinity in between.
inline double cap_bump(double rho, double b) {
  if (rho <= 0.5 * b) return 1.0;
  if (rho >= b) return 0.0;
  const double u = (rho - 0.5 * b) / (0.5 * b);
  const auto h = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  const double a = h(1.0 - u);
  return a / (a + h(u));
}

inline double cap_weight(const std::vector<SingularCap>& caps, const Vec3& v) {
  double w = 0.0;
  for (const auto& c : caps) w += cap_bump(angle_between(c.center, v), c.radius);
  return w;
}

/// Spherical coordinates: theta from the north pole, phi the longitude.
inline Vec3 spherical(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

struct AreaResult {
  double value = 0.0;
  double error = 0.0;
  double excision_bound = 0.0;
};

/// Area of f^2 g0. Away from singularities: nested adaptive Gauss-Kronrod in
/// spherical coordinates. In each singular cap: local polar coordinates with
/// annuli of halving radius; the last annulus bounds the excised disk.
inline AreaResult metric_area_detailed(const ConformalFactor& f, int quadrature_level = 8) {
  const double tol = std::pow(10.0, -std::clamp(quadrature_level, 2, 12));
  AreaResult out;
  if (auto c = f.constant_value()) {
    out.value = 4.0 * kPi * *c * *c;
    return out;
  }
  const auto sings = merge_singularities(f.singularities());
  const auto caps = sings.empty() ? std::vector<SingularCap>{} : singular_caps(sings);

  const auto global = [&](double theta) {
    const double st = std::sin(theta);
    const auto inner = [&](double phi) {
      const Vec3 v = spherical(theta, phi);
      const double w = 1.0 - cap_weight(caps, v);
      if (w <= 0.0) return 0.0;
      const double fv = f.at(v);
      return w * fv * fv;
    };
    return st * integrate_smooth(inner, 0.0, kTwoPi, tol).value;
  };
  const QuadResult g = integrate_smooth(global, 0.0, kPi, tol);
  CompensatedSum total;
  total.add(g.value);
  out.error += g.error;

  for (const auto& cap : caps) {
    const auto annulus = [&](double lo, double hi) {
      const auto radial = [&](double rho) {
        const double chi = cap_bump(rho, cap.radius);
        const double sr = std::sin(rho), cr = std::cos(rho);
        const auto ang = [&](double alpha) {
          const Vec3 v = cap.center * cr + (cap.frame.e1() * std::cos(alpha) + cap.frame.e2() * std::sin(alpha)) * sr;
          const double fv = f.at(v);
          return fv * fv;
        };
        return chi * sr * integrate_smooth(ang, 0.0, kTwoPi, tol).value;
      };
      return integrate_smooth(radial, lo, hi, tol);
    };
    CompensatedSum cap_sum;
    double prev = 0.0;
    int growth_streak = 0;
    double last = 0.0;
    for (int k = 0; k < 44; ++k) {
      const double hi = cap.radius * std::ldexp(1.0, -k);
      const QuadResult a = annulus(0.5 * hi, hi);
      if (!std::isfinite(a.value)) fail(ErrorKind::non_integrable, "non-finite annulus contribution");
      cap_sum.add(a.value);
      out.error += a.error;
      if (k >= 2 && prev > 0.0 && a.value >= 0.9 * prev) {
        if (++growth_streak >= 3) fail(ErrorKind::non_integrable, "annulus contributions do not decay near a singularity");
      } else if (k >= 2) {
        growth_streak = 0;
      }
      prev = a.value;
      last = a.value;
      if (k >= 4 && last <= 0.1 * tol * std::max(1e-300, total.value() + cap_sum.value())) break;
    }
    out.excision_bound += last;
    total.add(cap_sum.value());
  }
  out.value = total.value();
  out.error += out.excision_bound;
  return out;
}

inline double metric_area(const ConformalFactor& f, int quadrature_level = 8) {
  return metric_area_detailed(f, quadrature_level).value;
}

// ---------------------------------------------------------------------------
// Curves.

enum class SegmentKind { round_geodesic, chart_linear };

/// Polyline whose segments are round geodesics (or straight chart segments).
struct Curve {
  std::vector<ChartPoint> samples;
  bool closed = false;
  SegmentKind kind = SegmentKind::round_geodesic;

  std::size_t segment_count() const {
    if (samples.size() < 2) return 0;
    return closed ? samples.size() : samples.size() - 1;
  }
  std::pair<ChartPoint, ChartPoint> segment(std::size_t i) const {
    return {samples[i], samples[(i + 1) % samples.size()]};
  }
};

/// Parametrized segment on [0, 1]: position, chart position and round speed.
class SegmentPath {
 public:
  SegmentPath(const ChartPoint& p, const ChartPoint& q, SegmentKind kind) : kind_(kind) {
    if (kind_ == SegmentKind::chart_linear) {
      zp_ = p.value();
      zq_ = q.value();
      return;
    }
    a_ = unproject(p).v();
    b_ = unproject(q).v();
    theta_ = angle_between(a_, b_);
    if (theta_ > kPi - 1e-9) fail(ErrorKind::invalid_argument, "round segment between antipodal samples");
    if (theta_ > 0.0) {
      // In-plane unit vector orthogonal to a, toward b.
      perp_ = normalized(b_ - a_ * dot(a_, b_));
    }
  }

  SegmentKind kind() const { return kind_; }

  ChartPoint chart(double t) const {
    if (kind_ == SegmentKind::chart_linear) return zp_ + t * (zq_ - zp_);
    return project(SpherePoint(point(t)));
  }
  Vec3 point(double t) const {
    if (kind_ == SegmentKind::chart_linear) return unproject(zp_ + t * (zq_ - zp_)).v();
    if (theta_ == 0.0) return a_;
    const double s = t * theta_;
    return a_ * std::cos(s) + perp_ * std::sin(s);
  }
  double speed(double t) const {
    if (kind_ == SegmentKind::chart_linear) return round_speed_factor(zp_ + t * (zq_ - zp_)) * std::abs(zq_ - zp_);
    return theta_;
  }

  /// Parameter of closest approach to a sphere point, clamped to [0, 1].
  double closest_parameter(const Vec3& s) const {
    if (kind_ == SegmentKind::chart_linear) {
      const ChartPoint sz = project(SpherePoint(s));
      if (sz.is_infinite()) return std::abs(zq_) > std::abs(zp_) ? 1.0 : 0.0;
      const Complex d = zq_ - zp_;
      const double len2 = std::norm(d);
      if (len2 == 0.0) return 0.0;
      return std::clamp((std::conj(d) * (sz.value() - zp_)).real() / len2, 0.0, 1.0);
    }
    if (theta_ == 0.0) return 0.0;
    double ang = std::atan2(dot(s, perp_), dot(s, a_));
    if (ang < -0.5 * (kTwoPi - theta_)) ang += kTwoPi;
    return std::clamp(ang / theta_, 0.0, 1.0);
  }

  double round_length() const {
    if (kind_ == SegmentKind::round_geodesic) return theta_;
    return integrate_smooth([&](double t) { return speed(t); }, 0.0, 1.0, 1e-12).value;
  }

 private:
  SegmentKind kind_;
  Vec3 a_, b_, perp_;
  double theta_ = 0.0;
  Complex zp_, zq_;
};

namespace detail {

/// Integrates g(point, chart) * speed over one segment, splitting at closest
/// approach to nearby singular points and using tanh-sinh on those pieces.
template <typename G>
QuadResult integrate_segment(const SegmentPath& seg, const std::vector<Singularity>& sings, G&& g, double tol) {
  std::vector<double> cuts{0.0, 1.0};
  bool near = false;
  for (const auto& s : sings) {
    const Vec3 sp = s.point();
    const double t = seg.closest_parameter(sp);
    const double d = angle_between(seg.point(t), sp);
    if (d < 0.5) {
      near = near || s.kind == SingularityKind::inverse_sqrt;
      if (t > 1e-12 && t < 1.0 - 1e-12) cuts.push_back(t);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  const auto integrand = [&](double t) {
    const double v = g(seg.chart(t)) * seg.speed(t);
    // The singular point itself is excluded: a node rounding onto it contributes nothing.
    return std::isfinite(v) ? v : 0.0;
  };
  QuadResult total;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] <= 0.0) continue;
    const QuadResult r = near ? integrate_endpoint_singular(integrand, cuts[i], cuts[i + 1], tol)
                              : integrate_smooth(integrand, cuts[i], cuts[i + 1], tol);
    total.value += r.value;
    total.error += r.error;
  }
  return total;
}

inline void check_samples_regular(const ConformalFactor& f, const Curve& c) {
  for (const auto& s : f.singularities()) {
    if (s.kind != SingularityKind::inverse_sqrt) continue;
    const Vec3 sp = s.point();
    for (const auto& z : c.samples)
      if (angle_between(unproject(z).v(), sp) < 1e-12)
        fail(ErrorKind::singular_hit, "curve sample lies on an inverse-sqrt singularity");
  }
}

template <typename G>
double integrate_curve(const ConformalFactor& f, const Curve& c, G&& g, double tol) {
  if (c.samples.size() < 2) fail(ErrorKind::invalid_argument, "curve needs at least 2 samples");
  check_samples_regular(f, c);
  const std::size_t n = c.segment_count();
  std::vector<double> parts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [p, q] = c.segment(i);
    parts[i] = integrate_segment(SegmentPath(p, q, c.kind), f.singularities(), g, tol).value;
  }
  return compensated_sum(parts);
}

}  // namespace detail

/// Round length of a curve.
inline double round_length(const Curve& c) {
  CompensatedSum s;
  for (std::size_t i = 0; i < c.segment_count(); ++i) {
    const auto [p, q] = c.segment(i);
    s.add(SegmentPath(p, q, c.kind).round_length());
  }
  return s.value();
}

inline double curve_length(const ConformalFactor& f, const Curve& c, double tol = 1e-10) {
  if (auto k = f.constant_value()) {
    if (c.samples.size() < 2) fail(ErrorKind::invalid_argument, "curve needs at least 2 samples");
    return *k * round_length(c);
  }
  return detail::integrate_curve(f, c, [&](const ChartPoint& z) { return f(z); }, tol);
}

/// Energy for the constant-round-speed parametrization on [0, 2 pi]:
/// E = (l0 / 2 pi) * int f^2 ds0, with l0 the round length. L^2 <= 2 pi E.
inline double curve_energy(const ConformalFactor& f, const Curve& c, double tol = 1e-10) {
  const double l0 = round_length(c);
  if (auto k = f.constant_value()) return (l0 / kTwoPi) * (*k) * (*k) * l0;
  const double i2 = detail::integrate_curve(
      f, c,
      [&](const ChartPoint& z) {
        const double v = f(z);
        return v * v;
      },
      tol);
  return (l0 / kTwoPi) * i2;
}

/// Great circle sampled at n points as a closed curve.
inline Curve great_circle_curve(const GreatCircle& g, int n) {
  Curve c;
  c.closed = true;
  for (int i = 0; i < n; ++i) c.samples.push_back(project(g.point(kTwoPi * i / n)));
  return c;
}

// ---------------------------------------------------------------------------
// Integrals along unit-speed great circles.

namespace detail {

template <typename G>
double integrate_on_circle(const GreatCircle& gc, const std::vector<Singularity>& sings, G&& g, double tol) {
  std::vector<double> cuts;
  bool near = false;
  for (const auto& s : sings) {
    const Vec3 sp = s.point();
    if (gc.distance_to(sp) < 0.5) {
      cuts.push_back(gc.parameter_of(sp));
      near = near || s.kind == SingularityKind::inverse_sqrt;
    }
  }
  const auto integrand = [&](double t) {
    const double v = g(gc.at(t));
    return std::isfinite(v) ? v : 0.0;
  };
  if (cuts.empty()) return integrate_smooth(integrand, 0.0, kTwoPi, tol).value;
  std::sort(cuts.begin(), cuts.end());
  const double t0 = cuts.front();
  for (auto& t : cuts) t -= t0;
  cuts.push_back(kTwoPi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] <= 0.0) continue;
    const auto shifted = [&](double t) { return integrand(t + t0); };
    total += near ? integrate_endpoint_singular(shifted, cuts[i], cuts[i + 1], tol).value
                  : integrate_smooth(shifted, cuts[i], cuts[i + 1], tol).value;
  }
  return total;
}

}  // namespace detail

/// f-length of a great circle: int_0^{2 pi} f(gamma(t)) dt.
inline double circle_length(const ConformalFactor& f, const GreatCircle& gc, double tol = 1e-10) {
  if (auto k = f.constant_value()) return kTwoPi * *k;
  return detail::integrate_on_circle(gc, f.singularities(), [&](const Vec3& v) { return f.at(v); }, tol);
}

/// Energy of a great circle: int_0^{2 pi} f(gamma(t))^2 dt.
inline double circle_energy(const ConformalFactor& f, const GreatCircle& gc, double tol = 1e-10) {
  if (auto k = f.constant_value()) return kTwoPi * *k * *k;
  return detail::integrate_on_circle(
      gc, f.singularities(),
      [&](const Vec3& v) {
        const double x = f.at(v);
        return x * x;
      },
      tol);
}

/// Least round distance from a great circle to any declared singularity.
inline double circle_singular_distance(const ConformalFactor& f, const GreatCircle& gc) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& s : f.singularities()) d = std::min(d, gc.distance_to(s.point()));
  return d;
}

// ---------------------------------------------------------------------------
// Averaging and pullbacks.

inline bool is_involution(const SphereInvolution& F, double tol = 1e-10) {
  for (const auto& p : fibonacci_points(32))
    if (norm(F.apply(F.apply(p)).v() - p.v()) > tol) return false;
  return true;
}

/// Quadratic-mean average sqrt((f^2 + (f o F)^2) / 2), invariant under F.
inline ConformalFactor average_metric(const ConformalFactor& f, const SphereInvolution& F) {
  if (!F.is_round_isometry(1e-9) || !is_involution(F))
    fail(ErrorKind::not_isometry, "averaging map does not preserve the round metric");
  if (f.constant_value()) return f.with_symmetry(F);
  std::vector<Singularity> sings = f.singularities();
  for (const auto& s : f.singularities()) sings.push_back({F.apply(s.location), s.kind});
  auto tags = f.symmetry_tags();
  tags.push_back(F);
  return ConformalFactor(
      [f, F](const ChartPoint& z) {
        const double a = f(z);
        const double b = f(F.apply(z));
        return std::sqrt(0.5 * (a * a + b * b));
      },
      merge_singularities(std::move(sings)), std::move(tags));
}

/// Round stretch |dM|_{g0} of a Mobius map: (1+|w|^2) / (|aw+b|^2 + |cw+d|^2).
inline double mobius_round_stretch(const MobiusMap& m, const ChartPoint& w) {
  if (w.is_infinite()) return 1.0 / (std::norm(m.a()) + std::norm(m.c()));
  const Complex z = w.value();
  return (1.0 + std::norm(z)) / (std::norm(m.a() * z + m.b()) + std::norm(m.c() * z + m.d()));
}

/// Pullback of f by a Mobius map: (f o M) * |dM|_{g0}.
inline ConformalFactor pullback_by_mobius(const ConformalFactor& f, const MobiusMap& m) {
  const MobiusMap inv = m.inverse();
  std::vector<Singularity> sings;
  for (const auto& s : f.singularities()) sings.push_back({inv.apply(s.location), s.kind});
  return ConformalFactor([f, m](const ChartPoint& w) { return f(m.apply(w)) * mobius_round_stretch(m, w); },
                         std::move(sings));
}

// ---------------------------------------------------------------------------
// Admissibility.

struct AdmissibilityReport {
  bool admissible = true;
  std::vector<std::string> diagnostics;
  std::optional<double> area;
};

inline AdmissibilityReport check_admissible(const ConformalFactor& f, int quadrature_level = 6) {
  AdmissibilityReport rep;
  const auto sings = f.singularities();
  for (const auto& p : fibonacci_points(2000)) {
    bool near = false;
    for (const auto& s : sings) near = near || angle_between(p.v(), s.point()) < 1e-3;
    if (near) continue;
    const double v = f(p);
    if (!(v > 0.0) || !std::isfinite(v)) {
      rep.admissible = false;
      rep.diagnostics.push_back("factor not positive and finite at a regular sample point");
      break;
    }
  }
  for (std::size_t i = 0; i < sings.size(); ++i) {
    if (sings[i].kind != SingularityKind::inverse_sqrt) continue;
    // f * sqrt(r) in a local conformal coordinate (z - s, or 1/z at infinity).
    std::vector<double> scaled;
    for (double r : {1e-3, 1e-4, 1e-5}) {
      double acc = 0.0;
      for (int k = 0; k < 8; ++k) {
        const Complex u = std::polar(r, kTwoPi * (k + 0.25) / 8);
        const ChartPoint z = sings[i].location.is_infinite() ? ChartPoint(1.0 / u) : ChartPoint(sings[i].location.value() + u);
        acc += f(z) * std::sqrt(r);
      }
      scaled.push_back(acc / 8);
    }
    for (std::size_t k = 0; k + 1 < scaled.size(); ++k) {
      const double ratio = scaled[k + 1] / scaled[k];
      if (!(ratio >= 0.5 && ratio <= 2.0)) {
        rep.admissible = false;
        rep.diagnostics.push_back("singularity " + std::to_string(i) + ": f*sqrt(r) not bounded above and below");
        break;
      }
    }
  }
  try {
    rep.area = metric_area(f, quadrature_level);
  } catch (const Error& e) {
    rep.admissible = false;
    rep.diagnostics.push_back(e.what());
  }
  return rep;
}

}  // namespace systole
