#pragma once

// Averaging over the space of oriented great circles: the Fubini identity
// int E(gamma) d gamma = 2 pi area(f^2 g0), and the short circles and
// figure-eights it guarantees.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "systole/conformal_metric.hpp"
#include "systole/football.hpp"
#include "systole/parallel.hpp"
#include "systole/random.hpp"

namespace systole {

/// Minimum round distance from a sampled circle to any singularity.
inline constexpr double kGenericCircleMargin = 1e-6;

/// Draws circles sequentially, resampling those within kGenericCircleMargin
/// of a declared singularity (and, optionally, those failing `extra`).
template <typename Reject>
std::vector<GreatCircle> sample_generic_circles(const ConformalFactor& f, std::size_t count, std::uint64_t seed,
                                                Reject&& extra, std::size_t* resampled = nullptr) {
  DeterministicRng rng(seed);
  std::vector<GreatCircle> out;
  out.reserve(count);
  std::size_t rejected = 0;
  while (out.size() < count) {
    GreatCircle g(uniform_sphere_point(rng));
    if (circle_singular_distance(f, g) < kGenericCircleMargin || extra(g)) {
      if (++rejected > 100 * count + 1000) fail(ErrorKind::no_generic_sample, "no generic great circle found");
      continue;
    }
    out.push_back(g);
  }
  if (resampled) *resampled = rejected;
  return out;
}

inline std::vector<GreatCircle> sample_generic_circles(const ConformalFactor& f, std::size_t count, std::uint64_t seed,
                                                       std::size_t* resampled = nullptr) {
  return sample_generic_circles(f, count, seed, [](const GreatCircle&) { return false; }, resampled);
}

struct SampleStats {
  double mean = 0.0;
  double standard_error = 0.0;
};

inline SampleStats sample_stats(const std::vector<double>& xs) {
  SampleStats s;
  const double n = static_cast<double>(xs.size());
  s.mean = compensated_sum(xs) / n;
  if (xs.size() < 2) return s;
  CompensatedSum sq;
  for (double x : xs) sq.add((x - s.mean) * (x - s.mean));
  s.standard_error = std::sqrt(sq.value() / (n - 1.0) / n);
  return s;
}

struct AveragingReport {
  std::size_t sample_count = 0;
  std::size_t resampled = 0;
  double mean_energy = 0.0;
  double energy_standard_error = 0.0;
  /// Monte Carlo estimate of the circle-space integral of E: 4 pi * mean E.
  double circle_integral = 0.0;
  double circle_integral_standard_error = 0.0;
  double area = 0.0;
  double area_error = 0.0;
  /// 2 pi * area.
  double area_term = 0.0;
  bool agree = false;
  GreatCircle best_circle;
  double best_length = 0.0;
  double mean_length = 0.0;
  /// 3 * (standard error of mean E) / mean E.
  double delta = 0.0;
};

inline AveragingReport fubini_check(const ConformalFactor& f, std::size_t samples, std::uint64_t seed,
                                    int quadrature_level = 8) {
  if (samples < 1) fail(ErrorKind::invalid_argument, "fubini_check needs samples >= 1");
  AveragingReport rep;
  rep.sample_count = samples;
  const auto area = metric_area_detailed(f, quadrature_level);
  rep.area = area.value;
  rep.area_error = area.error;
  rep.area_term = kTwoPi * area.value;

  const auto circles = sample_generic_circles(f, samples, seed, &rep.resampled);
  std::vector<double> energy(samples), length(samples);
  parallel_for(samples, [&](std::size_t i) {
    energy[i] = circle_energy(f, circles[i]);
    length[i] = circle_length(f, circles[i]);
  });
  const SampleStats es = sample_stats(energy);
  rep.mean_energy = es.mean;
  rep.energy_standard_error = es.standard_error;
  rep.circle_integral = kCircleSpaceMeasure * es.mean;
  rep.circle_integral_standard_error = kCircleSpaceMeasure * es.standard_error;
  rep.delta = es.mean > 0.0 ? 3.0 * es.standard_error / es.mean : 0.0;
  const double quad_tol = kTwoPi * area.error + 1e-9 * rep.area_term;
  rep.agree = std::abs(rep.circle_integral - rep.area_term) <= 3.0 * rep.circle_integral_standard_error + quad_tol;

  std::size_t best = 0;
  for (std::size_t i = 1; i < samples; ++i)
    if (length[i] < length[best]) best = i;
  rep.best_circle = circles[best];
  rep.best_length = length[best];
  rep.mean_length = compensated_sum(length) / static_cast<double>(samples);
  return rep;
}

struct ShortCircleResult {
  GreatCircle circle;
  double length = 0.0;
  double mean_length = 0.0;
  double area = 0.0;
  /// pi * area: the bound on length^2 before slack.
  double bound = 0.0;
  double delta = 0.0;
  bool bound_holds = false;
};

/// Least f-length among sampled circles; certifies L^2 <= pi * area * (1 + delta)
/// via L^2 <= 2 pi E(gamma) <= 2 pi * (sample mean of E).
inline ShortCircleResult find_short_great_circle(const ConformalFactor& f, std::size_t samples, std::uint64_t seed,
                                                 int quadrature_level = 8) {
  const AveragingReport rep = fubini_check(f, samples, seed, quadrature_level);
  ShortCircleResult out;
  out.circle = rep.best_circle;
  out.length = rep.best_length;
  out.mean_length = rep.mean_length;
  out.area = rep.area;
  out.bound = kPi * rep.area;
  out.delta = rep.delta + rep.area_error / rep.area + 1e-9;
  out.bound_holds = out.length * out.length <= out.bound * (1.0 + out.delta);
  return out;
}

struct FootballSearchResult {
  FootballGeodesic geodesic;
  double figure_length = 0.0;
  std::array<double, 2> hoop_lengths{};
  /// area(f^2 g_AF), computed on AF directly.
  double area = 0.0;
  /// area of the pullback to the cover (twice area).
  double cover_area = 0.0;
  double delta = 0.0;
  double mean_figure_length = 0.0;
  std::size_t skipped = 0;
  bool inversion_symmetric = false;
  bool figure_bound_holds = false;
  bool hoop_bound_holds = false;
};

inline bool is_invariant_under(const ConformalFactor& f, const SphereInvolution& F, double tol = 1e-10) {
  for (const auto& p : fibonacci_points(64)) {
    bool near = false;
    for (const auto& s : f.singularities()) near = near || angle_between(p.v(), s.point()) < 1e-3;
    if (near) continue;
    const double a = f(p), b = f(F.apply(p));
    if (std::abs(a - b) > tol * std::max(1.0, std::abs(a))) return false;
  }
  return true;
}

/// Figure-eight geodesic of least f-length among images of sampled circles on
/// the cover. f is a factor against g_AF. Certifies
/// L_fig^2 <= 2 pi area(f^2 g_AF) (1 + delta), and for inversion-symmetric f
/// each hoop L <= sqrt((pi / 2) area) (1 + delta).
inline FootballSearchResult find_short_football_geodesic(const ConformalFactor& f_on_af, std::size_t samples,
                                                         std::uint64_t seed, int quadrature_level = 8) {
  FootballSearchResult out;
  const ConformalFactor cover = pullback_to_cover(f_on_af);
  const AreaResult area = metric_area_detailed(football_product(f_on_af), quadrature_level);
  out.area = area.value;
  out.cover_area = metric_area(cover, quadrature_level);
  out.inversion_symmetric = is_invariant_under(f_on_af, SphereInvolution::equatorial_inversion());

  const auto degenerate = [](const GreatCircle& g) {
    const Vec3& n = g.normal();
    return std::abs(n.z) < 1e-9 || std::hypot(n.x, n.y) < 1e-9;
  };
  const auto circles = sample_generic_circles(cover, samples, seed, degenerate, &out.skipped);
  std::vector<double> energy(samples), length(samples);
  parallel_for(samples, [&](std::size_t i) {
    energy[i] = circle_energy(cover, circles[i]);
    length[i] = circle_length(cover, circles[i]);
  });
  const SampleStats es = sample_stats(energy);
  out.delta = (es.mean > 0.0 ? 3.0 * es.standard_error / es.mean : 0.0) + area.error / area.value + 1e-9;
  std::size_t best = 0;
  for (std::size_t i = 1; i < samples; ++i)
    if (length[i] < length[best]) best = i;
  out.geodesic = figure_eight_geodesic(circles[best]);
  out.figure_length = length[best];
  out.hoop_lengths = hoop_lengths(cover, out.geodesic);
  out.mean_figure_length = compensated_sum(length) / static_cast<double>(samples);
  out.figure_bound_holds = out.figure_length * out.figure_length <= kTwoPi * out.area * (1.0 + out.delta);
  const double hoop_bound = std::sqrt(0.5 * kPi * out.area) * (1.0 + out.delta);
  out.hoop_bound_holds = out.inversion_symmetric && out.hoop_lengths[0] <= hoop_bound && out.hoop_lengths[1] <= hoop_bound;
  return out;
}

}  // namespace systole
