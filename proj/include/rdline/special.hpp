#pragma once

namespace rdline {

/// Scaled complementary error function exp(z^2) * erfc(z).
///
/// Stays finite and accurate for large positive z where erfc underflows.
/// For z below about -26 the result overflows, as does the true value.
double erfcx(double z);

}  // namespace rdline
