#pragma once

#include <array>
#include <cmath>
#include <sstream>

#include "rdline/error.hpp"

namespace rdline::detail {

/// Cramer solve of [[m00, m01], [m10, m11]] x = r with a relative
/// determinant test.
inline std::array<double, 2> solve_2x2(double m00, double m01, double m10, double m11, double r0,
                                       double r1, const char* what) {
  const double det = m00 * m11 - m01 * m10;
  const double scale = std::abs(m00 * m11) + std::abs(m01 * m10);
  if (!std::isfinite(det) || !(std::abs(det) > 1e-13 * scale)) {
    std::ostringstream msg;
    msg << what << ": determinant " << det << " is negligible against scale " << scale;
    fail(ErrorCode::SingularSystem, msg.str());
  }
  return {(r0 * m11 - m01 * r1) / det, (m00 * r1 - m10 * r0) / det};
}

}  // namespace rdline::detail
