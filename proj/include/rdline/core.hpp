#pragma once

#include <optional>
#include <string>

namespace rdline {

/// Domain length: either a positive finite value or the thermodynamic limit.
class Length {
 public:
  static Length finite(double value);
  static Length infinite() { return Length(); }

  bool is_infinite() const { return infinite_; }
  bool is_finite() const { return !infinite_; }
  /// Throws OutsideValidity for the infinite length.
  double value() const;

  bool operator==(const Length&) const = default;

 private:
  Length() = default;
  double value_ = 0.0;
  bool infinite_ = true;
};

/// Physical parameters of the drift-diffusion-annihilation model on [0, L].
///
/// Boundary conditions: D rho = -alpha + beta rho at x = 0 and
/// D rho = alpha_p - beta_p rho at x = L. The diffusion constant is 1.
struct ModelParams {
  double u = 0.0;       // drift velocity
  double a = 0.0;       // bulk annihilation rate (negative means creation)
  Length L = Length::infinite();
  double alpha = 0.0;   // injection at x = 0
  double beta = 0.0;    // extraction at x = 0
  double alpha_p = 0.0; // injection at x = L
  double beta_p = 0.0;  // extraction at x = L

  /// Throws InvalidArgument when a rate is negative or a value is not finite.
  void validate() const;

  /// Reflection x -> L - x: (u, alpha, beta) <-> (-u, alpha_p, beta_p).
  ModelParams mirrored() const;

  /// Same parameters in the thermodynamic limit.
  ModelParams thermodynamic() const;
};

class DerivedParams {
 public:
  double gamma2 = 0.0;       // a + u^2/4
  double tilde_beta = 0.0;   // beta - u/2
  double tilde_beta_p = 0.0; // beta_p + u/2

  bool has_gamma() const { return gamma_.has_value(); }
  /// sqrt(gamma2); throws OscillatoryGamma when gamma2 < 0.
  double gamma() const;

 private:
  friend DerivedParams derive(const ModelParams& params);
  std::optional<double> gamma_;
};

DerivedParams derive(const ModelParams& params);

/// Outcome of the stationary-state existence test.
///
/// `exists` is the strict combined bound
///   a > max(-u^2/4 + tilde_beta^2, -u^2/4 + tilde_beta_p^2).
/// The three underlying conditions (gamma real, tilde_beta + gamma > 0,
/// tilde_beta_p + gamma > 0) are reported separately; their conjunction is
/// `positive_profile()`, which is weaker than `exists` whenever one of the
/// shifted rates is positive.
struct ExistenceReport {
  bool exists = false;
  bool gamma_real = false;
  bool left_positive = false;
  bool right_positive = false;
  double threshold = 0.0;  // right-hand side of the combined bound

  bool positive_profile() const { return gamma_real && left_positive && right_positive; }
  std::string diagnostic() const;
  explicit operator bool() const { return exists; }
};

ExistenceReport stationary_exists(const ModelParams& params);

/// Right-hand side of the total-mass balance d/dt M for the given boundary
/// densities and total mass.
double mass_balance_rhs(const ModelParams& params, double rho0, double rhoL, double total_mass);

}  // namespace rdline
