#pragma once

// Round 2-sphere: points, stereographic chart, great circles, Mobius maps and
// the isometric involutions used for averaging.
//
// Chart convention: south pole (0,0,-1) -> 0, north pole (0,0,1) -> infinity,
// equator -> unit circle. The round metric in the chart is
// g0 = 4 / (1 + |z|^2)^2 |dz|^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "systole/error.hpp"
#include "systole/random.hpp"

namespace systole {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// Total measure of the space of oriented great circles (identified with unit normals).
inline constexpr double kCircleSpaceMeasure = 4.0 * std::numbers::pi;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr bool operator==(const Vec3&) const = default;
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  if (!(n > 0.0)) fail(ErrorKind::invalid_argument, "cannot normalize a zero vector");
  return v * (1.0 / n);
}

/// Angle between two unit vectors, accurate for nearly parallel inputs.
inline double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(norm(cross(a, b)), dot(a, b)); }

class SpherePoint {
 public:
  SpherePoint() : v_{0.0, 0.0, -1.0} {}
  /// Normalizes the input; the stored vector has unit norm to rounding.
  explicit SpherePoint(const Vec3& v) : v_(normalized(v)) {}

  const Vec3& v() const { return v_; }

  static SpherePoint south() { return SpherePoint(Vec3{0, 0, -1}); }
  static SpherePoint north() { return SpherePoint(Vec3{0, 0, 1}); }

 private:
  Vec3 v_;
};

/// A point of C u {infinity}.
class ChartPoint {
 public:
  ChartPoint() = default;
  ChartPoint(Complex z) : z_(z) {}  // NOLINT(google-explicit-constructor)
  ChartPoint(double x, double y = 0.0) : z_(x, y) {}  // NOLINT(google-explicit-constructor)

  static ChartPoint infinity() {
    ChartPoint p;
    p.infinite_ = true;
    return p;
  }

  bool is_infinite() const { return infinite_; }
  /// Finite coordinate; throws unbounded-chart at infinity.
  Complex value() const {
    if (infinite_) fail(ErrorKind::unbounded_chart, "chart point is infinity");
    return z_;
  }

  bool operator==(const ChartPoint& o) const {
    return infinite_ == o.infinite_ && (infinite_ || z_ == o.z_);
  }

 private:
  Complex z_{0.0, 0.0};
  bool infinite_ = false;
};

/// Stereographic projection from the north pole.
inline ChartPoint project(const SpherePoint& p) {
  const Vec3& v = p.v();
  const double rho2 = v.x * v.x + v.y * v.y;
  if (v.z > 0.0) {
    // Near the north pole use z = (x + iy)(1 + v_z) / (x^2 + y^2) to avoid cancellation.
    if (rho2 == 0.0) return ChartPoint::infinity();
    return Complex(v.x, v.y) * ((1.0 + v.z) / rho2);
  }
  return Complex(v.x, v.y) / (1.0 - v.z);
}

inline SpherePoint unproject(const ChartPoint& p) {
  if (p.is_infinite()) return SpherePoint::north();
  const Complex z = p.value();
  const double s = std::norm(z);
  if (s > 1e200) return SpherePoint::north();
  return SpherePoint(Vec3{2.0 * z.real(), 2.0 * z.imag(), s - 1.0} * (1.0 / (1.0 + s)));
}

/// Conformal factor of g0 against the Euclidean chart metric: 4 / (1 + |z|^2)^2.
inline double round_metric_factor(const ChartPoint& p) {
  if (p.is_infinite()) fail(ErrorKind::unbounded_chart, "round metric factor requested at infinity");
  const double s = std::norm(p.value());
  return 4.0 / ((1.0 + s) * (1.0 + s));
}

/// Round speed |dz|_{g0} / |dz| = 2 / (1 + |z|^2).
inline double round_speed_factor(Complex z) { return 2.0 / (1.0 + std::norm(z)); }

/// Oriented great circle gamma(t) = cos(t) e1 + sin(t) e2 with (e1, e2, n) right-handed.
class GreatCircle {
 public:
  GreatCircle() : GreatCircle(Vec3{0, 0, 1}) {}

  explicit GreatCircle(const Vec3& normal) : n_(normalized(normal)) {
    // Pick the coordinate axis least aligned with n to build the frame.
    Vec3 a{1, 0, 0};
    if (std::abs(n_.y) <= std::abs(n_.x) && std::abs(n_.y) <= std::abs(n_.z))
      a = {0, 1, 0};
    else if (std::abs(n_.z) <= std::abs(n_.x) && std::abs(n_.z) <= std::abs(n_.y))
      a = {0, 0, 1};
    e1_ = normalized(cross(a, n_));
    e2_ = cross(n_, e1_);
  }

  /// Frame given explicitly; e1 and e2 must be orthonormal.
  GreatCircle(const Vec3& e1, const Vec3& e2) : n_(normalized(cross(e1, e2))), e1_(normalized(e1)) {
    e2_ = cross(n_, e1_);
  }

  const Vec3& normal() const { return n_; }
  const Vec3& e1() const { return e1_; }
  const Vec3& e2() const { return e2_; }

  Vec3 at(double t) const { return e1_ * std::cos(t) + e2_ * std::sin(t); }
  Vec3 tangent(double t) const { return e2_ * std::cos(t) - e1_ * std::sin(t); }
  SpherePoint point(double t) const { return SpherePoint(at(t)); }

  /// Parameter of the orthogonal projection of v onto the circle plane.
  double parameter_of(const Vec3& v) const { return std::atan2(dot(v, e2_), dot(v, e1_)); }

  /// Round distance from a sphere point to the circle.
  double distance_to(const Vec3& v) const { return std::abs(std::asin(std::clamp(dot(v, n_), -1.0, 1.0))); }

 private:
  Vec3 n_, e1_, e2_;
};

/// Uniform point on S^2 from a normalized Gaussian triple.
inline Vec3 uniform_sphere_point(DeterministicRng& rng) {
  for (;;) {
    const Vec3 g{rng.normal(), rng.normal(), rng.normal()};
    const double n = norm(g);
    if (n > 1e-12) return g * (1.0 / n);
  }
}

/// Independent uniform great circles (normals uniform on S^2). Each sample
/// carries weight kCircleSpaceMeasure / count in circle-space integrals.
inline std::vector<GreatCircle> sample_great_circles(std::size_t count, std::uint64_t seed) {
  if (count < 1) fail(ErrorKind::invalid_argument, "sample_great_circles needs count >= 1");
  DeterministicRng rng(seed);
  std::vector<GreatCircle> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(uniform_sphere_point(rng));
  return out;
}

inline double circle_sample_weight(std::size_t count) { return kCircleSpaceMeasure / static_cast<double>(count); }

/// z -> (a z + b) / (c z + d), stored with determinant normalized to 1.
class MobiusMap {
 public:
  MobiusMap() = default;
  MobiusMap(Complex a, Complex b, Complex c, Complex d) {
    const Complex det = a * d - b * c;
    if (std::abs(det) < 1e-12) fail(ErrorKind::degenerate_mobius, "ad - bc vanishes");
    const Complex s = std::sqrt(det);
    a_ = a / s;
    b_ = b / s;
    c_ = c / s;
    d_ = d / s;
  }

  static MobiusMap identity() { return {}; }

  Complex a() const { return a_; }
  Complex b() const { return b_; }
  Complex c() const { return c_; }
  Complex d() const { return d_; }

  ChartPoint apply(const ChartPoint& p) const {
    if (p.is_infinite()) {
      if (c_ == Complex(0.0)) return ChartPoint::infinity();
      return a_ / c_;
    }
    const Complex z = p.value();
    const Complex den = c_ * z + d_;
    if (den == Complex(0.0)) return ChartPoint::infinity();
    return (a_ * z + b_) / den;
  }

  /// Finite-valued application for points known to avoid the pole.
  Complex operator()(Complex z) const { return (a_ * z + b_) / (c_ * z + d_); }

  /// dM/dz = 1 / (c z + d)^2 (determinant one).
  Complex derivative(Complex z) const {
    const Complex den = c_ * z + d_;
    return 1.0 / (den * den);
  }

  MobiusMap inverse() const { return {d_, -b_, -c_, a_}; }

  /// Composition: (m1 * m2)(z) = m1(m2(z)).
  friend MobiusMap operator*(const MobiusMap& m1, const MobiusMap& m2) {
    return {m1.a_ * m2.a_ + m1.b_ * m2.c_, m1.a_ * m2.b_ + m1.b_ * m2.d_, m1.c_ * m2.a_ + m1.d_ * m2.c_,
            m1.c_ * m2.b_ + m1.d_ * m2.d_};
  }

 private:
  Complex a_{1.0}, b_{0.0}, c_{0.0}, d_{1.0};
};

inline ChartPoint mobius_apply(const MobiusMap& m, const ChartPoint& z) { return m.apply(z); }

/// A circle or a line in the chart (a round circle on the sphere).
class GeneralizedCircle {
 public:
  static GeneralizedCircle circle(Complex center, double radius) {
    if (!(radius >= 1e-12)) fail(ErrorKind::degenerate_circle, "radius below 1e-12");
    GeneralizedCircle c;
    c.center_ = center;
    c.radius_ = radius;
    return c;
  }
  static GeneralizedCircle line(Complex point, Complex direction) {
    if (std::abs(direction) < 1e-300) fail(ErrorKind::degenerate_circle, "line direction vanishes");
    GeneralizedCircle c;
    c.is_line_ = true;
    c.center_ = point;
    c.direction_ = direction / std::abs(direction);
    return c;
  }
  static GeneralizedCircle unit_circle() { return circle(0.0, 1.0); }
  static GeneralizedCircle real_axis() { return line(0.0, 1.0); }

  bool is_line() const { return is_line_; }
  Complex center() const { return center_; }
  double radius() const { return radius_; }
  Complex direction() const { return direction_; }

  /// Signed offset: |z - c| - r for circles, distance to the line for lines.
  double offset(Complex z) const {
    if (is_line_) return std::abs((std::conj(direction_) * (z - center_)).imag());
    return std::abs(z - center_) - radius_;
  }

  /// Inversion (reflection for lines) fixing the circle pointwise.
  ChartPoint inversion(const ChartPoint& p) const {
    if (is_line_) {
      if (p.is_infinite()) return p;
      const Complex u = std::conj(direction_) * (p.value() - center_);
      return center_ + direction_ * std::conj(u);
    }
    if (p.is_infinite()) return center_;
    const Complex d = p.value() - center_;
    if (d == Complex(0.0)) return ChartPoint::infinity();
    return center_ + radius_ * radius_ / std::conj(d);
  }

  /// k sample points on the circle (finite ones only for lines).
  std::vector<Complex> samples(int k) const {
    std::vector<Complex> out;
    for (int i = 0; i < k; ++i) {
      if (is_line_) {
        const double s = std::tan(kPi * (i + 0.5) / k - kPi / 2);
        out.push_back(center_ + direction_ * s);
      } else {
        out.push_back(center_ + std::polar(radius_, kTwoPi * i / k));
      }
    }
    return out;
  }

 private:
  GeneralizedCircle() = default;
  bool is_line_ = false;
  Complex center_{0.0};
  double radius_ = 1.0;
  Complex direction_{1.0};
};

/// Mobius map sending fixed_circle to the unit circle and w to 0. Points
/// symmetric in fixed_circle go to points symmetric in the unit circle; in
/// particular the inversion partner of w goes to infinity.
inline MobiusMap mobius_normalize(const GeneralizedCircle& fixed_circle, const ChartPoint& w) {
  if (w.is_infinite()) fail(ErrorKind::invalid_argument, "mobius_normalize expects a finite w");
  const Complex wz = w.value();
  if (std::abs(fixed_circle.offset(wz)) < 1e-12) fail(ErrorKind::point_on_circle, "w lies on the fixed circle");
  if (fixed_circle.is_line()) {
    const Complex partner = fixed_circle.inversion(wz).value();
    // |z - w| = |z - w*| on the line, so the line maps to the unit circle.
    return MobiusMap(1.0, -wz, 1.0, -partner);
  }
  const double r = fixed_circle.radius();
  const Complex c = fixed_circle.center();
  const MobiusMap to_unit(1.0 / r, -c / r, 0.0, 1.0);
  const Complex wp = (wz - c) / r;
  // Blaschke factor (z - w') / (1 - conj(w') z) preserves the unit circle for |w'| != 1.
  const MobiusMap blaschke(1.0, -wp, -std::conj(wp), 1.0);
  return blaschke * to_unit;
}

/// Isometric involutions of (S^2, g0), plus circle inversions (which are
/// isometries only for great circles).
class SphereInvolution {
 public:
  enum class Kind { circle_inversion, rotation_pi, reflection };

  static SphereInvolution inversion(const GeneralizedCircle& c) {
    SphereInvolution f;
    f.kind_ = Kind::circle_inversion;
    f.circle_ = c;
    return f;
  }
  static SphereInvolution rotation_pi(const Vec3& axis) {
    SphereInvolution f;
    f.kind_ = Kind::rotation_pi;
    f.axis_ = normalized(axis);
    return f;
  }
  static SphereInvolution reflection(const Vec3& plane_normal) {
    SphereInvolution f;
    f.kind_ = Kind::reflection;
    f.axis_ = normalized(plane_normal);
    return f;
  }
  /// z -> conj(z): reflection in the plane y = 0.
  static SphereInvolution conjugation() { return reflection(Vec3{0, 1, 0}); }
  /// z -> 1 / conj(z): reflection in the equatorial plane.
  static SphereInvolution equatorial_inversion() { return inversion(GeneralizedCircle::unit_circle()); }
  /// z -> -z: the deck rotation of the football cover.
  static SphereInvolution deck_rotation() { return rotation_pi(Vec3{0, 0, 1}); }

  Kind kind() const { return kind_; }

  SpherePoint apply(const SpherePoint& p) const {
    const Vec3& v = p.v();
    switch (kind_) {
      case Kind::rotation_pi: return SpherePoint(axis_ * (2.0 * dot(axis_, v)) - v);
      case Kind::reflection: return SpherePoint(v - axis_ * (2.0 * dot(axis_, v)));
      case Kind::circle_inversion: return unproject(circle_->inversion(project(p)));
    }
    return p;
  }

  ChartPoint apply(const ChartPoint& z) const {
    if (kind_ == Kind::circle_inversion) return circle_->inversion(z);
    if (kind_ == Kind::reflection && axis_ == Vec3{0, 1, 0} && !z.is_infinite()) return std::conj(z.value());
    if (kind_ == Kind::rotation_pi && axis_ == Vec3{0, 0, 1} && !z.is_infinite()) return -z.value();
    return project(apply(unproject(z)));
  }

  /// True when the map preserves chord distances (hence g0) on sample points.
  bool is_round_isometry(double tol = 1e-9) const;

 private:
  SphereInvolution() = default;
  Kind kind_ = Kind::reflection;
  Vec3 axis_{0, 0, 1};
  std::optional<GeneralizedCircle> circle_;
};

/// Deterministic, roughly uniform point set (Fibonacci lattice).
inline std::vector<SpherePoint> fibonacci_points(int n) {
  std::vector<SpherePoint> out;
  out.reserve(n);
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    out.emplace_back(Vec3{r * std::cos(golden * i), r * std::sin(golden * i), z});
  }
  return out;
}

inline bool SphereInvolution::is_round_isometry(double tol) const {
  const auto pts = fibonacci_points(48);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    const auto& q = pts[(i * 7 + 3) % pts.size()];
    const Vec3 fp = apply(p).v();
    const Vec3 fq = apply(q).v();
    if (std::abs(norm(p.v() - q.v()) - norm(fp - fq)) > tol) return false;
  }
  return true;
}

/// Antipodal map; z -> -1/conj(z) in the chart.
inline SpherePoint antipode(const SpherePoint& p) { return SpherePoint(-p.v()); }
inline ChartPoint antipode(const ChartPoint& z) {
  if (z.is_infinite()) return Complex(0.0);
  if (z.value() == Complex(0.0)) return ChartPoint::infinity();
  return -1.0 / std::conj(z.value());
}

/// 3x3 matrices acting on R^3, used for the orthogonal-group identities of
/// the football example.
using Mat3 = std::array<std::array<double, 3>, 3>;

inline constexpr Mat3 mat_mul(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline constexpr Vec3 mat_apply(const Mat3& m, const Vec3& v) {
  return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
          m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

inline constexpr Mat3 kAntipodalMatrix{{{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}}};
inline constexpr Mat3 kDeckRotationMatrix{{{-1, 0, 0}, {0, -1, 0}, {0, 0, 1}}};
inline constexpr Mat3 kEquatorialReflectionMatrix{{{1, 0, 0}, {0, 1, 0}, {0, 0, -1}}};

}  // namespace systole
