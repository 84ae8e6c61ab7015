#include "rdline/special.hpp"

#include <cmath>
#include <numbers>

namespace rdline {

namespace {

// Continued fraction
//   erfcx(z) = (1/sqrt(pi)) / (z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
// evaluated bottom-up; converges quickly once z is a few units.
double erfcx_continued_fraction(double z) {
  constexpr int kTerms = 80;
  double tail = z;
  for (int n = kTerms; n >= 1; --n) tail = z + 0.5 * n / tail;
  return 1.0 / (std::sqrt(std::numbers::pi) * tail);
}

}  // namespace

double erfcx(double z) {
  if (std::isnan(z)) return z;
  if (z < 0.0) return 2.0 * std::exp(z * z) - erfcx(-z);
  if (z < 8.0) return std::exp(z * z) * std::erfc(z);
  return erfcx_continued_fraction(z);
}

}  // namespace rdline
