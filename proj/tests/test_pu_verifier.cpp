#include <gtest/gtest.h>

#include <cmath>

#include "systole/pu_verifier.hpp"
#include "test_support.hpp"

using namespace systole;

namespace {

const HyperellipticSurface& sextic() {
  static const HyperellipticSurface X = build_surface({1, 0, 0, 0, 0, 0, 1});
  return X;
}

void expect_certificate_invariants(const PuCertificate& c, const HyperellipticSurface& X) {
  EXPECT_LE(c.ratio, c.bound * (1.0 + c.delta));
  EXPECT_NEAR(c.ratio, c.path_length * c.path_length / c.area, 1e-12 * c.ratio);
  EXPECT_FALSE(c.lift_closes);
  EXPECT_FALSE(lift_closes(X, c.loop));
  EXPECT_TRUE(c.continuation_negates);
  EXPECT_FALSE(continuation_closes(X.cover(), c.loop));
  EXPECT_LE(static_cast<int>(c.used_tags.size()), X.genus() + 1);
  EXPECT_EQ(c.p.value().imag(), 0.0);
  EXPECT_EQ(c.loop.basepoint(), c.p.value());
  EXPECT_NEAR(c.delta, c.slack.total(), 1e-15);
  EXPECT_EQ(c.slack.perturbation, kPerturbationSlack);
  EXPECT_LE(c.surgeries, (X.genus() + 1 - 1) / 2);
  EXPECT_EQ(static_cast<int>(c.component_curves.size()), X.genus() + 1);
  for (int t : c.used_tags) EXPECT_TRUE(t >= 0 && t <= X.genus());
}

}  // namespace

TEST(Symmetrize, ConstantUnchanged) {
  const ConformalFactor s = symmetrize(ConformalFactor::constant(1.0), sextic());
  ASSERT_TRUE(s.constant_value());
  EXPECT_EQ(*s.constant_value(), 1.0);
}

TEST(Symmetrize, InvariantFactorUnchanged) {
  const ConformalFactor f = test_support::random_conjugation_symmetric_factor(3);
  const ConformalFactor s = symmetrize(f, sextic());
  for (const auto& p : fibonacci_points(200)) EXPECT_NEAR(s(p), f(p), 1e-10);
}

TEST(Symmetrize, GenericFactorBecomesInvariant) {
  const ConformalFactor f = test_support::random_smooth_factor(4, 0.5);
  const ConformalFactor s = symmetrize(f, sextic());
  for (const auto& p : fibonacci_points(200)) {
    const ChartPoint z = project(p);
    const ChartPoint zb = z.is_infinite() ? z : ChartPoint(std::conj(z.value()));
    EXPECT_NEAR(s(z), s(zb), 1e-10 * s(z));
  }
  const AreaResult a = metric_area_detailed(f, 8), b = metric_area_detailed(s, 8);
  EXPECT_NEAR(a.value, b.value, 10.0 * (a.error + b.error) + 1e-8 * a.value);
}

TEST(CoverPullback, DoublesTheArea) {
  const ConformalFactor f = test_support::random_conjugation_symmetric_factor(6);
  const double a = metric_area(f, 8);
  for (const auto& r : sextic().upper_roots()) {
    const MobiusMap M = mobius_normalize(GeneralizedCircle::real_axis(), r);
    EXPECT_NEAR(metric_area(cover_pullback(f, M), 7), 2.0 * a, 1e-4 * a);
  }
}

TEST(ShortLoop, FootballEqualityCase) {
  const Complex w = sextic().upper_roots()[0];
  const ConformalFactor f = af_pullback(GeneralizedCircle::real_axis(), w);
  const HoopResult h = short_loop_for_point(f, sextic(), w, 2000, 1);
  // A_X = 2 area(AF) = 4 pi, so the bound is sqrt(pi^2) = pi, met by every hoop.
  EXPECT_NEAR(h.cover_area, 4.0 * kPi, 1e-3);
  EXPECT_NEAR(h.bound, kPi, 1e-3);
  EXPECT_NEAR(h.smooth_length, kPi, 1e-6);
  EXPECT_NEAR(h.other_hoop_length, kPi, 1e-6);
  EXPECT_NEAR(h.polyline_length, kPi, 1e-5);
}

TEST(ShortLoop, PostconditionsForEveryRoot) {
  const ConformalFactor f = ConformalFactor::constant(1.0);
  for (const auto& w : sextic().upper_roots()) {
    const HoopResult h = short_loop_for_point(f, sextic(), w, 1000, 3);
    EXPECT_EQ(winding_number(h.loop, w), 1);
    const WindingProfile prof = winding_profile(h.loop, labeled_upper_roots(sextic()));
    bool has_w = false;
    for (const auto& s : labeled_upper_roots(sextic()))
      if (s.z == w) has_w = prof.odd_set.count(s.id) > 0;
    EXPECT_TRUE(has_w);
    EXPECT_EQ(h.loop.basepoint().imag(), 0.0);
    for (const auto& v : h.loop.vertices) EXPECT_GE(v.imag(), -1e-9);
    EXPECT_NEAR(h.cover_area, 8.0 * kPi, 1e-9);
    EXPECT_LE(h.smooth_length, h.bound * (1.0 + h.delta_mc));
    EXPECT_LE(h.polyline_length, h.bound * (1.0 + h.delta_mc) * (1.0 + h.delta_discretization));
    EXPECT_LE(h.delta_discretization, 1e-7);
    ASSERT_TRUE(h.loop.metric_length);
    EXPECT_NEAR(*h.loop.metric_length, loop_length(f, h.loop), 1e-12);
  }
}

TEST(ShortLoop, RandomSymmetricFactorsRespectTheBound) {
  for (int i = 0; i < 10; ++i) {
    const ConformalFactor f = test_support::random_conjugation_symmetric_factor(100 + i, 0.3);
    const double A = 2.0 * metric_area(f, 7);
    for (const auto& w : sextic().upper_roots()) {
      const HoopResult h = short_loop_for_point(f, sextic(), w, 400, 10 + i, 0, 7, A);
      EXPECT_EQ(winding_number(h.loop, w), 1);
      EXPECT_LE(h.polyline_length, std::sqrt(0.25 * kPi * A) * (1.0 + h.delta_mc + 2.0 * h.delta_discretization))
          << "factor " << i;
    }
  }
}

TEST(ShortLoop, RejectsPointsOffTheUpperHalfPlane) {
  EXPECT_THROW(short_loop_for_point(ConformalFactor::constant(1.0), sextic(), Complex(0.5, -0.5), 10, 1), Error);
  EXPECT_THROW(short_loop_for_point(ConformalFactor::constant(1.0), sextic(), Complex(0.5, 0.0), 10, 1), Error);
}

TEST(VerifyRelativePu, RoundQuotient) {
  const PuCertificate c = verify_relative_pu(ConformalFactor::constant(1.0), sextic(), 2000, 1);
  EXPECT_NEAR(c.area, 8.0 * kPi, 1e-9);
  EXPECT_LE(c.path_length, std::sqrt(2.0 * kPi * kPi) * (1.0 + c.delta));
  expect_certificate_invariants(c, sextic());
  EXPECT_NEAR(loop_length(ConformalFactor::constant(1.0), c.loop), c.path_length, 1e-9);
}

TEST(VerifyRelativePu, PerturbedSymmetricFactor) {
  const ConformalFactor f = test_support::random_conjugation_symmetric_factor(21, 0.2);
  const PuCertificate c = verify_relative_pu(f, sextic(), 1000, 2);
  expect_certificate_invariants(c, sextic());
  EXPECT_NEAR(c.area, c.area_original, 1e-5 * c.area);
}

TEST(VerifyRelativePu, AsymmetricFactorIsSymmetrizedFirst) {
  const ConformalFactor f = test_support::random_smooth_factor(9, 0.3);
  const PuCertificate c = verify_relative_pu(f, sextic(), 1000, 3);
  expect_certificate_invariants(c, sextic());
  // Averaging keeps the total area.
  EXPECT_NEAR(c.area, c.area_original, 1e-5 * c.area);
}

TEST(VerifyRelativePu, GenusFour) {
  const HyperellipticSurface X = build_surface({1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1});
  const PuCertificate c = verify_relative_pu(ConformalFactor::constant(1.0), X, 500, 4);
  expect_certificate_invariants(c, X);
}

TEST(VerifyPuRp2, RoundEquality) {
  const SystoleEstimate e = verify_pu_rp2(ConformalFactor::constant(1.0), 100, 1);
  EXPECT_NEAR(e.value, kPi, 1e-12);
  EXPECT_NEAR(e.area, kTwoPi, 1e-12);
  EXPECT_NEAR(e.value * e.value / (0.5 * kPi * e.area), 1.0, 1e-4);
  EXPECT_TRUE(e.inequality_holds);
  // The witness joins antipodal points.
  ASSERT_GE(e.witness.samples.size(), 2u);
  const Vec3 a = unproject(e.witness.samples.front()).v(), b = unproject(e.witness.samples.back()).v();
  EXPECT_NEAR(norm(a + b), 0.0, 1e-9);
}

TEST(VerifyPuRp2, ScaledEquality) {
  const SystoleEstimate e = verify_pu_rp2(ConformalFactor::constant(3.0), 100, 1);
  EXPECT_NEAR(e.value, 3.0 * kPi, 1e-11);
  EXPECT_NEAR(e.value * e.value / (0.5 * kPi * e.area), 1.0, 1e-4);
}

TEST(VerifyPuRp2, PerturbedStrict) {
  const ConformalFactor f([](const ChartPoint& z) {
    const Vec3 v = unproject(z).v();
    return 1.0 + 0.3 * v.z * v.z + 0.1 * v.x * v.y;
  });
  const SystoleEstimate e = verify_pu_rp2(f, 5000, 2);
  EXPECT_TRUE(e.inequality_holds);
  EXPECT_LT(e.value * e.value, e.bound);
}

TEST(VerifyPuRp2, RejectsNonAntipodal) {
  const ConformalFactor f([](const ChartPoint& z) { return 1.0 + 0.3 * unproject(z).v().z; });
  try {
    verify_pu_rp2(f, 10, 1);
    FAIL() << "expected not-antipodal";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_antipodal);
  }
}

TEST(RelativeSystole, RoundAndHomogeneity) {
  const SystoleEstimate one = relative_systole(ConformalFactor::constant(1.0), sextic(), 1000, 5);
  EXPECT_LE(one.value, kPi * std::sqrt(2.0) * (1.0 + one.delta));
  EXPECT_LE(one.value * one.value / one.area, 0.25 * kPi * (1.0 + one.delta));
  EXPECT_TRUE(one.inequality_holds);
  const SystoleEstimate two = relative_systole(ConformalFactor::constant(2.0), sextic(), 1000, 5);
  EXPECT_NEAR(two.value, 2.0 * one.value, 2.0 * one.delta * one.value);
}
