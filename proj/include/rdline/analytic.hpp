#pragma once

#include <string_view>

#include "rdline/core.hpp"

namespace rdline {

enum class StationaryCase { FiniteL, CaseI, CaseII, CaseIII };

std::string_view to_string(StationaryCase c) noexcept;

/// rho(x) = A exp[(u/2 - gamma) x] + A_p exp[(u/2 + gamma)(x - L)].
///
/// In the thermodynamic cases the amplitudes are stored with their
/// L-dependent exponential factors stripped, so each boundary layer is
/// addressed by the distance from its own wall: `operator()(x)` from x = 0
/// and `from_right(y)` with y = L - x.
class StationaryProfile {
 public:
  StationaryProfile(ModelParams params, StationaryCase tag, double A, double A_p);

  double A() const { return A_; }
  double A_p() const { return A_p_; }
  StationaryCase case_tag() const { return tag_; }
  const ModelParams& params() const { return params_; }

  /// Density at distance x from the left wall. Throws OutsideValidity for
  /// CASE_III, where the left-referenced profile is not finite.
  double operator()(double x) const;

  /// Density at distance y from the right wall. Throws OutsideValidity for
  /// CASE_II.
  double from_right(double y) const;

 private:
  ModelParams params_;
  StationaryCase tag_;
  double A_;
  double A_p_;
  double gamma_;
};

StationaryProfile stationary_finite(const ModelParams& params);
StationaryProfile stationary_thermo(const ModelParams& params);

/// Terms of the half-line Green's function. value = prefactor *
/// (free + image + boundary), except that `value` is evaluated in log form
/// and stays finite when the separate factors would overflow.
struct GreenEval {
  double t = 0.0;
  double x = 0.0;
  double x_p = 0.0;
  double value = 0.0;
  double prefactor = 0.0;  // exp(u xi / 2 - gamma^2 t)
  double free = 0.0;       // (4 pi t)^(-1/2) exp(-xi^2 / 4t)
  double image = 0.0;      // (4 pi t)^(-1/2) exp(-X^2 / 4t)
  double boundary = 0.0;   // -tilde_beta exp(tilde_beta X + tilde_beta^2 t) erfc(...)
};

/// Thermodynamic-limit Green's function G(t; x, x_p). Zero for t < 0;
/// t = 0 raises UndefinedAtTZero.
GreenEval green_thermo(const ModelParams& params, double t, double x, double x_p);

/// G1(x) = 1/a + A1 exp[(u/2 - gamma) x] + A1_p exp[(u/2 + gamma)(x - L)].
class G1Profile {
 public:
  G1Profile(ModelParams params, double A1, double A1_p);

  double A1() const { return A1_; }
  double A1_p() const { return A1_p_; }
  double operator()(double x) const;

 private:
  ModelParams params_;
  double A1_;
  double A1_p_;
  double gamma_;
};

G1Profile g1_finite(const ModelParams& params);
double g1_thermo(const ModelParams& params, double x);

/// Equal-argument-order two-time response G2(t; x1, x2), t >= 0, in the
/// thermodynamic limit: bound-state closed form plus continuum quadrature.
double g2_thermo_quadrature(const ModelParams& params, double t, double x1, double x2);

enum class G2Regime { NegativeTildeBeta, ZeroTildeBetaDrift, ZeroTildeBetaNoDrift, PositiveTildeBeta };

std::string_view to_string(G2Regime r) noexcept;

struct G2Asymptotic {
  double value = 0.0;
  G2Regime regime = G2Regime::PositiveTildeBeta;
};

/// Large-t form of G2 selected by the sign of tilde_beta (and u when it is 0).
G2Asymptotic g2_asymptotic(const ModelParams& params, double t, double x1, double x2);

}  // namespace rdline
