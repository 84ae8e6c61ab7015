#pragma once

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace rdline::detail {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

template <class F>
QuadResult integrate_fixed_panels(F& f, double a, double b, int n) {
  QuadResult out;
  const double h = (b - a) / n;
  for (int i = 0; i < n; ++i) {
    const double lo = a + i * h;
    const double hi = (i + 1 == n) ? b : lo + h;
    double l1 = 0.0;
    out.value += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 0, 0.0, nullptr, &l1);
    out.l1 += l1;
  }
  return out;
}

/// Composite 31-point Gauss-Kronrod over [a, b] with panels no wider than
/// `panel`. The error estimate is the difference between this panel
/// layout and one with panels of half the width.
template <class F>
QuadResult integrate_panels(F&& f, double a, double b, double panel) {
  if (!(b > a)) return {};
  const int n = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
  const QuadResult coarse = integrate_fixed_panels(f, a, b, n);
  QuadResult fine = integrate_fixed_panels(f, a, b, 2 * n);
  fine.error = std::abs(fine.value - coarse.value);
  return fine;
}

}  // namespace rdline::detail
