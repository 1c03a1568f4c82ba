#include <gtest/gtest.h>

#include <cmath>

#include "systole/football.hpp"
#include "systole/loop_surgery.hpp"
#include "test_support.hpp"

using namespace systole;

namespace {

PolyLoop circle_loop(Complex c, double r, int n = 64, double phase = 0.0) {
  std::vector<Complex> v;
  for (int k = 0; k < n; ++k) v.push_back(c + std::polar(r, phase + kTwoPi * k / n));
  return make_loop(v);
}

double euclidean_length(const PolyLoop& l) {
  double t = 0.0;
  for (std::size_t k = 0; k < l.size(); ++k) t += std::abs(l.at(k + 1) - l.at(k));
  return t;
}

// Lift of sqrt(prod (z - s)) traced with fixed small steps up to loop parameter s_end.
Complex traced_lift(const PolyLoop& loop, const std::vector<Complex>& pts, double s_end) {
  const auto q = [&](Complex z) {
    Complex a = 1.0;
    for (const auto& p : pts) a *= z - p;
    return a;
  };
  Complex w = std::sqrt(q(loop.at(0)));
  if (w.real() < 0.0 || (w.real() == 0.0 && w.imag() < 0.0)) w = -w;
  const int steps = 4000;
  for (int i = 1; i <= steps; ++i) {
    Complex w1 = std::sqrt(q(loop.point(s_end * i / steps)));
    if (std::abs(w1 - w) > std::abs(w1 + w)) w1 = -w1;
    w = w1;
  }
  return w;
}

// Gerono lemniscate scaled by r about c: basepoint on the right lobe.
PolyLoop figure_eight(Complex c, double r, int n = 200) {
  std::vector<Complex> v;
  for (int k = 0; k < n; ++k) {
    const double t = kTwoPi * k / n + 0.013;
    v.push_back(c + r * Complex(std::cos(t), std::sin(t) * std::cos(t)));
  }
  return make_loop(v);
}

void expect_same_loop(const PolyLoop& a, const PolyLoop& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a.at(k), b.at(k));
}

}  // namespace

TEST(Winding, Examples) {
  const PolyLoop unit = circle_loop(0.0, 1.0);
  const WindingProfile p0 = winding_profile(unit, {{0, Complex(0.0)}});
  EXPECT_EQ(p0.winding.at(0), 1);
  EXPECT_EQ(p0.odd_set, std::set<int>{0});
  const WindingProfile p3 = winding_profile(unit, {{0, Complex(3.0)}});
  EXPECT_EQ(p3.winding.at(0), 0);
  EXPECT_TRUE(p3.odd_set.empty());
  EXPECT_EQ(winding_profile(reversed(unit), {{0, Complex(0.0)}}).winding.at(0), -1);
  // Double traversal.
  std::vector<Complex> twice = unit.vertices;
  for (const auto& v : unit.vertices) twice.push_back(v * 1.01);
  // Points strictly inside both turns, away from the connecting spikes.
  const WindingProfile pd = winding_profile(make_loop(twice), {{0, Complex(0.1, 0.1)}});
  EXPECT_EQ(pd.winding.at(0), 2);
  EXPECT_TRUE(pd.odd_set.empty());
  try {
    winding_profile(unit, {{0, Complex(1.0, 0.0)}});
    FAIL() << "expected point-on-loop";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::point_on_loop);
  }
}

TEST(Winding, FootballHoop) {
  const FootballGeodesic g = figure_eight_geodesic(GreatCircle(Vec3{0.3, -0.4, 0.8}));
  const PolyLoop hoop = make_loop(hoop_polyline(g, 0, 512));
  EXPECT_EQ(std::abs(winding_profile(hoop, {{0, Complex(0.0)}}).winding.at(0)), 1);
}

TEST(Classify, DisjointLoops) {
  const PolyLoop b = circle_loop(Complex(0.0, 1.0), 0.3), c = circle_loop(Complex(2.0, 1.0), 0.3);
  EXPECT_TRUE(classify_intersections(b, c, RamifiedCover::over({{0, Complex(0.0, 1.0)}})).empty());
}

TEST(Classify, TwoLoopsAroundOnePoint) {
  const Complex s(0.0, 1.0);
  // Basepoints on the outer arcs: the basepoint-free arcs bound the lens around s,
  // so the two crossings differ in kind.
  const PolyLoop b = circle_loop(s + 0.1, 0.3, 97, 0.01), c = circle_loop(s - 0.1, 0.3, 101, kPi + 0.02);
  const auto recs = classify_intersections(b, c, RamifiedCover::over({{0, s}}));
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_NE(recs[0].kind, recs[1].kind);
  for (const auto& r : recs) {
    const Complex lb = traced_lift(b, {s}, r.sb), lc = traced_lift(c, {s}, r.sc);
    const bool same = std::abs(lb - lc) < std::abs(lb + lc);
    EXPECT_EQ(r.kind == CrossingKind::crossroad, same);
  }
}

TEST(Classify, LoopsAvoidingTheBranchPoints) {
  const std::vector<Complex> pts{Complex(-3.0, 1.0), Complex(3.0, 1.2), Complex(0.0, 4.0)};
  const PointSet S{{0, pts[0]}, {1, pts[1]}, {2, pts[2]}};
  const PolyLoop b = circle_loop(Complex(0.2, 1.0), 0.5, 61, 0.03), c = circle_loop(Complex(-0.2, 1.1), 0.5, 67, 0.05);
  const auto recs = classify_intersections(b, c, RamifiedCover::over(S));
  ASSERT_EQ(recs.size(), 2u);
  for (const auto& r : recs) {
    EXPECT_EQ(r.kind, CrossingKind::crossroad);
    const Complex lb = traced_lift(b, pts, r.sb), lc = traced_lift(c, pts, r.sc);
    EXPECT_LT(std::abs(lb - lc), std::abs(lb + lc));
  }
}

TEST(Classify, NonTransverseIsReported) {
  const PolyLoop b = make_loop({Complex(0, 0), Complex(2, 0), Complex(2, 2)});
  const PolyLoop c = make_loop({Complex(1, -1), Complex(1, 0), Complex(3, 1)});
  try {
    classify_intersections(b, c, RamifiedCover::over({{0, Complex(5.0, 5.0)}}));
    FAIL() << "expected non-transverse-intersection";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::non_transverse_intersection);
  }
}

TEST(ExchangeArcs, TwoCirclesGiveLenses) {
  const ConformalFactor f = ConformalFactor::constant(1.0);
  // b is based inside c and c outside b: the outputs are the lens and the union.
  const PolyLoop b = circle_loop(Complex(-0.5, 2.0), 1.0, 90, 0.011), c = circle_loop(Complex(0.5, 2.0), 1.0, 90, 0.007);
  const auto recs = classify_intersections(b, c, RamifiedCover::over({{0, Complex(0.0, 2.0)}}));
  ASSERT_EQ(recs.size(), 2u);
  const auto [nb, nc] = exchange_arcs(b, c, recs[0], recs[1]);
  EXPECT_EQ(nb.basepoint(), b.basepoint());
  EXPECT_EQ(nc.basepoint(), c.basepoint());
  EXPECT_NEAR(loop_length(f, nb) + loop_length(f, nc), loop_length(f, b) + loop_length(f, c), 1e-9);
  EXPECT_NEAR(euclidean_length(nb) + euclidean_length(nc), euclidean_length(b) + euclidean_length(c), 1e-12);
  EXPECT_EQ(std::abs(winding_number(nb, Complex(0.0, 2.0))), 1);
  EXPECT_EQ(winding_number(nb, Complex(-1.2, 2.0)), 0);
  EXPECT_EQ(winding_number(nb, Complex(1.2, 2.0)), 0);
  for (double x : {-1.2, 0.0, 1.2}) EXPECT_EQ(std::abs(winding_number(nc, Complex(x, 2.0))), 1);
}

TEST(ExchangeArcs, DoubleExchangeRestoresInputs) {
  const PolyLoop b = circle_loop(Complex(-0.5, 2.0), 1.0, 90, 0.011), c = circle_loop(Complex(0.5, 2.0), 1.0, 90, kPi + 0.007);
  const RamifiedCover cover = RamifiedCover::over({{0, Complex(0.0, 2.0)}});
  const auto recs = classify_intersections(b, c, cover);
  ASSERT_EQ(recs.size(), 2u);
  const auto [nb, nc] = exchange_arcs(b, c, recs[0], recs[1]);
  // The exchange points are vertices of both outputs; swapping the same arcs back
  // must give the inputs with those two points inserted.
  const auto index_of = [](const PolyLoop& l, Complex z) {
    for (std::size_t k = 0; k < l.size(); ++k)
      if (l.at(k) == z) return static_cast<double>(k);
    ADD_FAILURE() << "exchange point is not a vertex";
    return 0.0;
  };
  std::vector<IntersectionRecord> back(2);
  for (int i = 0; i < 2; ++i) {
    back[i].location = recs[i].location;
    back[i].sb = index_of(nb, recs[i].location);
    back[i].sc = index_of(nc, recs[i].location);
  }
  const auto [rb, rc] = exchange_arcs(nb, nc, back[0], back[1]);
  const auto strip = [&](const PolyLoop& l) {
    std::vector<Complex> v;
    for (std::size_t k = 0; k < l.size(); ++k)
      if (l.at(k) != recs[0].location && l.at(k) != recs[1].location) v.push_back(l.at(k));
    return v;
  };
  EXPECT_EQ(strip(rb), b.vertices);
  EXPECT_EQ(strip(rc), c.vertices);
  const ConformalFactor f = test_support::random_smooth_factor(2);
  EXPECT_NEAR(loop_length(f, rb), loop_length(f, b), 1e-9);
  EXPECT_NEAR(loop_length(f, rc), loop_length(f, c), 1e-9);
}

TEST(ExchangeArcs, SamePointRejected) {
  const PolyLoop b = circle_loop(Complex(-0.5, 2.0), 1.0, 90, 0.011), c = circle_loop(Complex(0.5, 2.0), 1.0, 90, 0.007);
  const auto recs = classify_intersections(b, c, RamifiedCover::over({{0, Complex(0.0, 2.0)}}));
  ASSERT_FALSE(recs.empty());
  try {
    exchange_arcs(b, c, recs[0], recs[0]);
    FAIL() << "expected same-point";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::same_point);
  }
}

TEST(ExchangeArcs, ConservationOnRandomPairs) {
  DeterministicRng rng(31);
  const ConformalFactor f = test_support::random_smooth_factor(5, 0.5);
  const RamifiedCover cover = RamifiedCover::over({{0, Complex(50.0, 50.0)}});
  int done = 0, attempts = 0;
  while (done < 100 && attempts < 10000) {
    ++attempts;
    const int nb = 3 + static_cast<int>(rng.uniform() * 8), nc = 3 + static_cast<int>(rng.uniform() * 8);
    std::vector<Complex> vb, vc;
    for (int k = 0; k < nb; ++k) vb.push_back(Complex(rng.uniform(-2, 2), rng.uniform(0.1, 3)));
    for (int k = 0; k < nc; ++k) vc.push_back(Complex(rng.uniform(-2, 2), rng.uniform(0.1, 3)));
    const PolyLoop b = make_loop(vb), c = make_loop(vc);
    std::vector<IntersectionRecord> recs;
    try {
      recs = classify_intersections(b, c, cover);
    } catch (const Error&) {
      continue;
    }
    if (recs.size() < 2) continue;
    const std::size_t i = rng.next_u64() % recs.size();
    std::size_t j = rng.next_u64() % recs.size();
    if (i == j) j = (j + 1) % recs.size();
    const auto [xb, xc] = exchange_arcs(b, c, recs[i], recs[j]);
    const double before = loop_length(f, b) + loop_length(f, c);
    EXPECT_NEAR(loop_length(f, xb) + loop_length(f, xc), before, 1e-9 * std::max(1.0, before));
    EXPECT_NEAR(euclidean_length(xb) + euclidean_length(xc), euclidean_length(b) + euclidean_length(c), 1e-9);
    EXPECT_EQ(xb.basepoint(), b.basepoint());
    EXPECT_EQ(xc.basepoint(), c.basepoint());
    ++done;
  }
  EXPECT_EQ(done, 100);
}

TEST(RemoveBadSubloop, SimpleLoopUnchanged) {
  const PolyLoop l = circle_loop(Complex(0.0, 1.0), 0.5);
  expect_same_loop(remove_bad_subloop(l, RamifiedCover::over({{0, Complex(0.0, 1.0)}})), l);
}

TEST(RemoveBadSubloop, FigureEightLosesTheOddHoop) {
  const ConformalFactor f = ConformalFactor::constant(1.0);
  const Complex c(0.0, 2.0);
  const PolyLoop fig = figure_eight(c, 1.0);
  const PointSet S{{0, c + Complex(-0.6, 0.0)}};
  const RamifiedCover cover = RamifiedCover::over(S);
  ASSERT_EQ(self_crossings(fig).size(), 1u);
  const PolyLoop out = remove_bad_subloop(fig, cover);
  EXPECT_LT(loop_length(f, out), loop_length(f, fig));
  EXPECT_EQ(winding_number(out, S[0].z), 0);
  EXPECT_EQ(out.basepoint(), fig.basepoint());
  // closes(out) = (closes(fig) == closes(hoop)).
  const PolyLoop hoop = subloop(fig, self_crossings(fig)[0]);
  EXPECT_EQ(lift_closes(cover, out), lift_closes(cover, fig) == lift_closes(cover, hoop));
  expect_same_loop(remove_bad_subloop(out, cover), out);
}

TEST(RemoveBadSubloop, EvenHoopKept) {
  const Complex c(0.0, 2.0);
  const PolyLoop fig = figure_eight(c, 1.0);
  // No branch point inside either lobe: every subloop lifts closed.
  const PointSet none{{0, Complex(10.0, 10.0)}};
  expect_same_loop(remove_bad_subloop(fig, RamifiedCover::over(none)), rebased(fig));
}

TEST(Surgery, OddInputReturnedDirectly) {
  const ConformalFactor f = ConformalFactor::constant(1.0);
  const SurgeryInstance inst = canonical_instance();
  // c alone around the third point only.
  const PolyLoop c = tangent_wobble_loop(1.9, 0.75, 0.0, 3, 0.0);
  const PointSet S = inst.S;
  ASSERT_TRUE(winding_profile(c, S).odd());
  const double L = std::max(*inst.loops[0].metric_length, loop_length(f, c));
  const SurgeryResult r = surgery(inst.loops[0], c, S, L, RamifiedCover::over(S), f);
  EXPECT_EQ(r.branch, "c");
  expect_same_loop(r.loop, rebased(c));
}

TEST(Surgery, CanonicalConfigurationExhaustive) {
  const ConformalFactor f = ConformalFactor::constant(1.0);
  const SurgeryInstance inst = canonical_instance();
  const PolyLoop& b = inst.loops[0];
  const PolyLoop& c = inst.loops[1];
  const RamifiedCover cover = RamifiedCover::over(inst.S);
  const WindingProfile wb = winding_profile(b, inst.S), wc = winding_profile(c, inst.S);
  EXPECT_EQ(wb.odd_set, (std::set<int>{0, 1}));
  EXPECT_EQ(wc.odd_set, (std::set<int>{1, 2}));
  // Every mixed pair is tried by hand; at least one yields an odd loop within L.
  const auto recs = classify_intersections(b, c, cover);
  int mixed = 0, good = 0;
  for (std::size_t i = 0; i < recs.size(); ++i)
    for (std::size_t j = i + 1; j < recs.size(); ++j) {
      if (recs[i].kind == recs[j].kind) continue;
      ++mixed;
      const auto [nb, nc] = exchange_arcs(b, c, recs[i], recs[j]);
      for (const PolyLoop* h : {&nb, &nc})
        if (winding_profile(*h, inst.S).odd() && loop_length(f, *h) <= inst.L + 1e-9) ++good;
    }
  EXPECT_GT(mixed, 0);
  EXPECT_GT(good, 0);
  const SurgeryResult r = surgery(b, c, inst.S, inst.L, cover, f);
  EXPECT_EQ(r.branch, "exchange");
  EXPECT_TRUE(winding_profile(r.loop, inst.S).odd());
  EXPECT_LE(*r.loop.metric_length, inst.L + 1e-9);
  ASSERT_TRUE(r.audit);
  EXPECT_NEAR(r.audit->input_total, r.audit->output_total, 1e-9);
  EXPECT_FALSE(lift_closes(cover, r.loop));
}

TEST(Surgery, RandomizedConfigurations) {
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 50 && seed < 400; ++seed) {
    const ConformalFactor f = seed % 2 ? ConformalFactor::constant(1.0) : test_support::random_smooth_factor(seed, 0.3);
    const SurgeryInstance inst = chain_instance(3, seed, f);
    const PolyLoop& b = inst.loops[0];
    const PolyLoop& c = inst.loops[1];
    const WindingProfile wb = winding_profile(b, inst.S), wc = winding_profile(c, inst.S);
    std::set<int> diff;
    for (int id : wc.odd_set)
      if (!wb.odd_set.count(id)) diff.insert(id);
    if (diff.size() % 2 == 0) continue;
    SurgeryResult r;
    try {
      r = surgery(b, c, inst.S, inst.L, RamifiedCover::over(inst.S), f);
    } catch (const Error& e) {
      // Degenerate crossings are the caller's to perturb.
      if (e.kind() == ErrorKind::non_transverse_intersection) continue;
      throw;
    }
    EXPECT_TRUE(winding_profile(r.loop, inst.S).odd()) << "seed " << seed;
    EXPECT_LE(loop_length(f, r.loop), inst.L + 1e-9) << "seed " << seed;
    EXPECT_TRUE(r.loop.basepoint() == b.basepoint() || r.loop.basepoint() == c.basepoint());
    if (r.audit) EXPECT_NEAR(r.audit->input_total, r.audit->output_total, 1e-9 * r.audit->input_total);
    ++checked;
  }
  EXPECT_EQ(checked, 50);
}

TEST(FindOddLoop, BaseCase) {
  const PointSet S{{0, Complex(0.0, 1.0)}};
  const PolyLoop l = tangent_wobble_loop(0.0, 1.0, 0.0, 3, 0.0);
  const ConformalFactor f = ConformalFactor::constant(1.0);
  const OddLoopResult r = find_odd_loop({l}, S, loop_length(f, l), f);
  EXPECT_EQ(r.surgeries, 0);
  expect_same_loop(r.loop, rebased(l));
}

TEST(FindOddLoop, CanonicalNeedsOneSurgery) {
  const SurgeryInstance inst = canonical_instance();
  const OddLoopResult r = find_odd_loop(inst.loops, inst.S, inst.L, ConformalFactor::constant(1.0));
  EXPECT_EQ(r.surgeries, 1);
  EXPECT_TRUE(winding_profile(r.loop, inst.S).odd());
  EXPECT_LE(*r.loop.metric_length, inst.L + 1e-9);
  EXPECT_NEAR(r.loop.basepoint().imag(), 0.0, 0.0);
  // On a genus-2 surface branched over S and its conjugates the lift stays open.
  std::vector<Complex> up;
  for (const auto& s : inst.S) up.push_back(s.z);
  const HyperellipticSurface X = build_surface(test_support::from_upper_roots(up));
  EXPECT_FALSE(lift_closes(X, r.loop));
  EXPECT_FALSE(continuation_closes(X.cover(), r.loop));
}

TEST(FindOddLoop, RandomInstancesOfSizeFive) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ConformalFactor f = ConformalFactor::constant(1.0);
    const SurgeryInstance inst = seed % 2 ? chain_instance(5, seed, f) : random_instance(5, seed, f);
    OddLoopResult r;
    try {
      r = find_odd_loop(inst.loops, inst.S, inst.L, f);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::non_transverse_intersection) continue;
      throw;
    }
    const WindingProfile w = winding_profile(r.loop, inst.S);
    EXPECT_TRUE(w.odd()) << "seed " << seed;
    EXPECT_LE(loop_length(f, r.loop), inst.L + 1e-9);
    EXPECT_LE(r.surgeries, 2);
    for (const auto& a : r.audits) EXPECT_NEAR(a.input_total, a.output_total, 1e-9 * a.input_total);
    EXPECT_FALSE(lift_closes(RamifiedCover::over(inst.S), r.loop));
  }
}

TEST(FindOddLoop, Errors) {
  const ConformalFactor f = ConformalFactor::constant(1.0);
  const PolyLoop l = tangent_wobble_loop(0.0, 1.0, 0.0, 3, 0.0);
  try {
    find_odd_loop({l}, {{0, Complex(0.0, 1.0)}, {1, Complex(5.0, 1.0)}}, 100.0, f);
    FAIL() << "expected even-set";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::even_set);
  }
  try {
    find_odd_loop({l}, {{0, Complex(0.0, 1.0)}, {1, Complex(5.0, 1.0)}, {2, Complex(7.0, 1.0)}}, 100.0, f);
    FAIL() << "expected coverage-violated";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::coverage_violated);
  }
}

TEST(Perturbation, BoundedAndBasepointStaysReal) {
  DeterministicRng rng(3);
  const PolyLoop l = tangent_wobble_loop(0.5, 1.0, 0.1, 3, 0.2);
  const PolyLoop p = perturbed(l, 1e-7, rng);
  for (std::size_t k = 0; k < l.size(); ++k) EXPECT_LE(std::abs(p.vertices[k] - l.vertices[k]), 1e-7);
  EXPECT_EQ(p.basepoint().imag(), 0.0);
  const ConformalFactor f = ConformalFactor::constant(1.0);
  EXPECT_LE(loop_length(f, p), loop_length(f, l) * (1.0 + 1e-5));
}
