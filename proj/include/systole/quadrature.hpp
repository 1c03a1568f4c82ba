#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace systole {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive 15-point Gauss-Kronrod on [a, b]; tol is relative to the L1 norm.
template <typename F>
QuadResult integrate_smooth(F&& f, double a, double b, double tol, unsigned max_depth = 12) {
  QuadResult r;
  double l1 = 0.0;
  r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, tol, &r.error, &l1);
  return r;
}

/// Tanh-sinh on [a, b]; tolerates integrable endpoint singularities and sharp
/// endpoint peaks. The integrand is never evaluated at a or b.
template <typename F>
QuadResult integrate_endpoint_singular(F&& f, double a, double b, double tol) {
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator(12);
  QuadResult r;
  if (!(b > a)) return r;
  if (b - a <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)))) {
    r.value = (b - a) * f(0.5 * (a + b));
    return r;
  }
  // Each half is integrated from its singular end at 0, the form in which the
  // library keeps abscissas off the endpoints.
  const double h = 0.5 * (b - a);
  double l1 = 0.0, e0 = 0.0, e1 = 0.0;
  r.value = integrator.integrate([&](double x) { return f(a + x); }, 0.0, h, tol, &e0, &l1);
  r.value += integrator.integrate([&](double x) { return f(b - x); }, 0.0, h, tol, &e1, &l1);
  r.error = e0 + e1;
  return r;
}

/// Fixed 8-point Gauss-Legendre on [a, b]. Linear in the integrand, which the
/// distance graph relies on.
template <typename F>
double gauss_legendre8(F&& f, double a, double b) {
  static constexpr std::array<double, 4> x{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                           0.9602898564975363};
  static constexpr std::array<double, 4> w{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                           0.1012285362903763};
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += w[i] * (f(c - h * x[i]) + f(c + h * x[i]));
  return s * h;
}

}  // namespace systole
