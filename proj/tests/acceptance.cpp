#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "systole/distance.hpp"
#include "systole/pu_verifier.hpp"
#include "test_support.hpp"

using namespace systole;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class... Args>
std::string format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

const HyperellipticSurface& sextic() {
  static const HyperellipticSurface X = build_surface({1, 0, 0, 0, 0, 0, 1});
  return X;
}

GreatCircle generic_source(DeterministicRng& rng) {
  for (;;) {
    const Vec3 n = uniform_sphere_point(rng);
    if (std::abs(n.z) > 0.05 && std::hypot(n.x, n.y) > 0.05) return GreatCircle(n);
  }
}

Outcome fubini_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  const AveragingReport rep = fubini_check(ConformalFactor::constant(1.0), 100000, 1);
  const double secs = seconds_since(t0);
  const double target = 8.0 * kPi * kPi;
  const bool within = std::abs(rep.circle_integral - target) <= 3.0 * rep.circle_integral_standard_error + 1e-9 * target;
  return {within && rep.agree && secs < 30.0,
          format("4pi*mean(E) = %.12f vs 8pi^2 = %.12f, se %.3g, %.2f s", rep.circle_integral, target,
                 rep.circle_integral_standard_error, secs)};
}

Outcome pu_equality() {
  const SystoleEstimate e = verify_pu_rp2(ConformalFactor::constant(1.0), 20000, 1);
  const double rel = std::abs(e.value * e.value / (0.5 * kPi * e.area) - 1.0);
  return {rel <= 1e-4 && e.inequality_holds,
          format("sys^2 = %.10f, (pi/2) area = %.10f, rel %.2e", e.value * e.value, 0.5 * kPi * e.area, rel)};
}

Outcome football_sharpness() {
  DeterministicRng rng(5);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto h = hoop_lengths(figure_eight_geodesic(generic_source(rng)));
    worst = std::max({worst, std::abs(h[0] - kPi), std::abs(h[1] - kPi)});
  }
  const double area = metric_area(football_metric(), 10);
  const double rel = std::abs(kPi * kPi / (0.5 * kPi * area) - 1.0);
  return {worst <= 1e-6 && std::abs(area - kTwoPi) <= 1e-4 && rel <= 1e-4,
          format("200 figure-eights, max |hoop - pi| %.2e; area %.9f; L^2/((pi/2)A) - 1 = %.2e", worst, area, rel)};
}

Outcome exact_factor() {
  DeterministicRng rng(3);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double r = std::pow(10.0, rng.uniform(-4.0, 4.0));
    const double f = af_factor(std::polar(r, rng.uniform(0.0, kTwoPi)));
    const double want = (1.0 + r * r) * (1.0 + r * r) / (4.0 * r * (1.0 + r) * (1.0 + r));
    worst = std::max(worst, std::abs(f * f - want) / want);
  }
  const double r = 1e-4, f = af_factor(Complex(r, 0.0));
  const double limit = std::abs(f * f * 4.0 * r - 1.0);
  return {worst <= 1e-12 && limit <= 0.01,
          format("1000 radii, max rel err %.2e; |f^2 / (1/(4r)) - 1| at r=1e-4: %.2e", worst, limit)};
}

Outcome lift_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const HyperellipticSurface& X = sextic();
  const RamifiedCover cover = X.cover();
  DeterministicRng rng(2024);
  int agree = 0, open = 0;
  for (int i = 0; i < 500; ++i) {
    PolyLoop l;
    for (;;) {
      const int n = 3 + static_cast<int>(rng.uniform() * 12);
      std::vector<Complex> v;
      for (int k = 0; k < n; ++k) v.push_back(Complex(rng.uniform(-2, 2), rng.uniform(-2, 2)));
      l = make_loop(v);
      bool ok = true;
      for (const auto& r : X.weierstrass_roots()) ok = ok && distance_to_loop(l, r) >= 1e-3;
      if (ok) break;
    }
    const bool parity = lift_closes(X, l);
    agree += parity == continuation_closes(cover, l) ? 1 : 0;
    open += parity ? 0 : 1;
  }
  const double secs = seconds_since(t0);
  return {agree == 500 && secs < 60.0,
          format("%d/500 agree (%d open lifts), %.2f s", agree, open, secs)};
}

Outcome surgery_suite() {
  const int sizes[] = {1, 3, 5, 7};
  int done = 0, failures = 0, surgeries_total = 0, exchanges = 0;
  std::uint64_t seed = 1;
  std::string first_failure;
  while (done < 200 && seed < 5000) {
    const int size = sizes[done % 4];
    const ConformalFactor f =
        seed % 3 == 0 ? test_support::random_smooth_factor(seed, 0.3) : ConformalFactor::constant(1.0);
    const SurgeryInstance inst = seed % 2 ? chain_instance(size, seed, f) : random_instance(size, seed, f);
    ++seed;
    const RamifiedCover cover = RamifiedCover::over(inst.S);
    std::vector<PolyLoop> loops = inst.loops;
    DeterministicRng jitter(seed);
    std::optional<OddLoopResult> r;
    for (int attempt = 0; attempt < 5 && !r; ++attempt) {
      try {
        r = find_odd_loop(loops, inst.S, inst.L, f);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::non_transverse_intersection && e.kind() != ErrorKind::point_on_loop) throw;
        for (auto& l : loops) l = perturbed(l, 1e-9, jitter);
      }
    }
    if (!r) continue;
    bool ok = winding_profile(r->loop, inst.S).odd();
    ok = ok && loop_length(f, r->loop) <= inst.L + 1e-9;
    ok = ok && r->surgeries <= (size - 1) / 2;
    for (const auto& a : r->audits) ok = ok && std::abs(a.input_total - a.output_total) <= 1e-9;
    // Direct exchange check on the first two loops of every instance with two crossings.
    if (loops.size() >= 2) {
      try {
        const auto recs = classify_intersections(loops[0], loops[1], cover);
        if (recs.size() >= 2) {
          const auto [xb, xc] = exchange_arcs(loops[0], loops[1], recs[0], recs[1]);
          const double before = loop_length(f, loops[0]) + loop_length(f, loops[1]);
          ok = ok && std::abs(loop_length(f, xb) + loop_length(f, xc) - before) <= 1e-9;
          ++exchanges;
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::non_transverse_intersection) throw;
      }
    }
    if (!ok) {
      ++failures;
      if (first_failure.empty()) first_failure = format(" first failure at seed %llu", (unsigned long long)(seed - 1));
    }
    surgeries_total += r->surgeries;
    ++done;
  }
  return {done == 200 && failures == 0,
          format("%d instances, %d failures, %d surgeries, %d direct exchanges%s", done, failures, surgeries_total,
                 exchanges, first_failure.c_str())};
}

Outcome averaging() {
  const std::vector<SphereInvolution> maps{SphereInvolution::conjugation(), SphereInvolution::equatorial_inversion(),
                                           SphereInvolution::deck_rotation()};
  double worst_area = 0.0, worst_gap = 0.0;
  bool ok = true;
  DeterministicRng rng(61);
  for (int i = 0; i < 20; ++i) {
    const ConformalFactor f = test_support::random_smooth_factor(500 + i, 0.5);
    const auto& F = maps[i % maps.size()];
    const ConformalFactor avg = average_metric(f, F);
    const AreaResult a = metric_area_detailed(f, 8), b = metric_area_detailed(avg, 8);
    const double tol = 10.0 * (a.error + b.error) + 1e-8 * a.value;
    worst_area = std::max(worst_area, std::abs(a.value - b.value) / a.value);
    ok = ok && std::abs(a.value - b.value) <= tol;
    if (i % 4 == 0) {
      const DistanceEstimator df(f, 12), da(avg, 12);
      for (int k = 0; k < 20; ++k) {
        const ChartPoint p = project(SpherePoint(uniform_sphere_point(rng)));
        const ChartPoint q = project(SpherePoint(uniform_sphere_point(rng)));
        const double lhs = da.distance(p, q);
        const double rhs = 0.5 * (df.distance(p, q) + df.distance(F.apply(p), F.apply(q)));
        worst_gap = std::max(worst_gap, (rhs - lhs) / rhs);
        ok = ok && lhs >= rhs * (1.0 - 1e-9);
      }
    }
  }
  return {ok, format("20 factors, max rel area change %.2e; 100 pairs, max (rhs - lhs)/rhs %.2e", worst_area,
                     worst_gap)};
}

Outcome end_to_end() {
  std::vector<ConformalFactor> factors{ConformalFactor::constant(1.0)};
  for (int i = 0; i < 10; ++i) factors.push_back(test_support::random_conjugation_symmetric_factor(900 + i, 0.2));
  bool ok = true;
  double max_ratio = 0.0, max_delta = 0.0, max_secs = 0.0;
  int max_tags = 0;
  std::ostringstream bad;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const PuCertificate c = verify_relative_pu(factors[i], sextic(), 20000, 1 + i);
      const double secs = seconds_since(t0);
      const bool run_ok = c.ratio <= kPi / 4.0 * (1.0 + c.delta) && c.delta < 0.05 && !c.lift_closes &&
                          !lift_closes(sextic(), c.loop) && static_cast<int>(c.used_tags.size()) <= 3 &&
                          secs < 300.0;
      if (!run_ok) bad << " run " << i << " (ratio " << c.ratio << ", delta " << c.delta << ")";
      ok = ok && run_ok;
      max_ratio = std::max(max_ratio, c.ratio);
      max_delta = std::max(max_delta, c.delta);
      max_secs = std::max(max_secs, secs);
      max_tags = std::max(max_tags, static_cast<int>(c.used_tags.size()));
    } catch (const Error& e) {
      ok = false;
      bad << " run " << i << " threw " << e.what();
    }
  }
  return {ok, format("11 runs, max ratio %.6f (pi/4 = %.6f), max delta %.4f, max tags %d, max %.1f s", max_ratio,
                     kPi / 4.0, max_delta, max_tags, max_secs) +
                  bad.str()};
}

Outcome degenerate_family() {
  const Complex w = std::polar(1.0, kPi / 6.0);
  const ConformalFactor af = af_pullback(GeneralizedCircle::real_axis(), w);
  std::vector<double> ratios, deltas;
  for (double t : {0.5, 0.75, 1.0}) {
    const ConformalFactor ft([af, t](const ChartPoint& z) { return (1.0 - t) + t * af(z); }, af.singularities());
    const PuCertificate c = verify_relative_pu(ft, sextic(), 20000, 1);
    ratios.push_back(c.ratio);
    deltas.push_back(c.delta);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < ratios.size(); ++i)
    monotone = monotone && ratios[i] >= ratios[i - 1] * (1.0 - deltas[i] - deltas[i - 1]);
  const double gap = std::abs(ratios.back() - kPi / 4.0) / (kPi / 4.0);
  return {monotone && ratios.back() > ratios.front() && gap <= deltas.back(),
          format("t = 0.5, 0.75, 1: ratios %.6f, %.6f, %.6f; pi/4 = %.6f; relative gap at t=1 %.2e", ratios[0],
                 ratios[1], ratios[2], kPi / 4.0, gap)};
}

}  // namespace

int main() {
  setenv("SYSTOLE_LAB_THREADS", "1", 1);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"Fubini identity for the round metric", fubini_identity},
      {"projective plane equality case", pu_equality},
      {"football sharpness", football_sharpness},
      {"exact football factor", exact_factor},
      {"lift-closure oracle equivalence", lift_oracle},
      {"surgery suite", surgery_suite},
      {"averaging", averaging},
      {"end-to-end certificate on z^6+1", end_to_end},
      {"degenerate family trend", degenerate_family}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
