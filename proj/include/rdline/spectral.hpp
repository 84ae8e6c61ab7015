#pragma once

#include <complex>
#include <optional>
#include <string_view>
#include <vector>

#include "rdline/core.hpp"

namespace rdline {

/// One relaxation eigenpair on a finite interval.
///
/// psi(x) = exp(u x / 2) [B exp(-q x) + B_p exp(q (x - L))] with q real or
/// purely imaginary. The q = 0 mode, which exists only when the boundary
/// rates allow it, is stored with `linear = true` and
/// psi(x) = exp(u x / 2) (B + B_p x).
struct SpectralMode {
  double E = 0.0;
  std::complex<double> q;
  std::complex<double> B;
  std::complex<double> B_p;
  double L = 0.0;
  ModelParams params;
  bool linear = false;
};

/// Determinant of the boundary system for B, B_p at wavenumber q.
std::complex<double> boundary_determinant(const ModelParams& params, std::complex<double> q);

/// The n_modes largest eigenvalues, sorted descending, each normalized.
std::vector<SpectralMode> find_modes(const ModelParams& params, int n_modes);

double mode_function(const SpectralMode& mode, double x);
double adjoint_mode_function(const SpectralMode& mode, double x);

/// Rescales (B, B_p) so that the integral of psi* psi over [0, L] is 1 and
/// B has positive real part (ties: positive imaginary part).
SpectralMode normalize_mode(const SpectralMode& mode);

enum class Phase { Fast, SlowLeft, SlowRight };
enum class TauKind { Finite, Infinite, Unstable };
enum class Side { Left, Right };

std::string_view to_string(Phase p) noexcept;
std::string_view to_string(TauKind k) noexcept;
std::string_view to_string(Side s) noexcept;

struct PhaseReport {
  double E_m = 0.0;
  TauKind tau_kind = TauKind::Finite;
  std::optional<double> tau;  // present only for TauKind::Finite
  Phase phase = Phase::Fast;
  std::optional<Side> controlling_boundary;
  std::optional<double> q_r;  // real wavenumber of the bound state in the slow phases
  bool tie = false;           // u sits exactly on a phase boundary
};

/// Largest thermodynamic-limit eigenvalue, relaxation time and phase.
PhaseReport e_max_thermo(const ModelParams& params);

}  // namespace rdline
