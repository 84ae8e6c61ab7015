#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rdline/core.hpp"

namespace rdline {

/// Uniform mesh x_i = i dx on [0, L] with N nodes.
struct Grid {
  int N = 0;
  double L = 0.0;
  double dx = 0.0;

  static Grid make(int N, double L);
  double x(int i) const { return i * dx; }
};

struct DensityField {
  Grid grid;
  std::vector<double> values;
  double t = 0.0;
};

using Trajectory = std::vector<DensityField>;

/// Discretized H with ghost-node Robin rows. Row i reads
///   sub[i] psi[i-1] + diag[i] psi[i] + sup[i] psi[i+1]
/// (sub[0] and sup[N-1] are unused). `affine` holds the inhomogeneous
/// boundary terms from alpha and alpha_p.
struct TridiagonalOperator {
  Grid grid;
  ModelParams params;
  std::vector<double> sub, diag, sup;
  std::vector<double> affine;

  /// H psi, without the affine part.
  std::vector<double> apply(std::span<const double> psi) const;
};

/// Throws InvalidArgument for an infinite L, N < 3, or cell Peclet number
/// |u| dx / 2 >= 1.
TridiagonalOperator assemble_operator(const ModelParams& params, const Grid& grid);

/// Solution of H rho + affine + source = 0 on the grid; `source` may be
/// empty.
std::vector<double> discrete_stationary(const TridiagonalOperator& op, std::span<const double> source = {});

struct IntegrateOptions {
  double dt = 1e-3;
  double T = 1.0;
  int stride = 1;       // keep every stride-th step
  double theta = 0.5;   // 0.5 is Crank-Nicolson, 1 is backward Euler
  std::function<double(double t, double x)> source;           // optional forcing
  std::function<void(const DensityField&)> observer;          // called on every kept frame
  bool store_frames = true;
};

/// theta-scheme stepper for d rho/dt = H rho + affine + s, factorized once.
class ThetaStepper {
 public:
  ThetaStepper(const TridiagonalOperator& op, double dt, double theta = 0.5);

  /// Advances rho in place. `forcing` (length N or empty) is added to the
  /// right-hand side after scaling by dt.
  void step(std::vector<double>& rho, std::span<const double> forcing = {}) const;

  /// Solves (I - theta dt H) y = rhs in place.
  void solve(std::vector<double>& rhs) const;

  /// (I + (1 - theta) dt H) rho + dt affine.
  void explicit_part(std::span<const double> rho, std::vector<double>& out) const;

  const TridiagonalOperator& op() const { return op_; }
  double dt() const { return dt_; }

 private:
  TridiagonalOperator op_;
  double dt_;
  double theta_;
  std::vector<double> lower_, upper_, inv_pivot_;
};

/// Throws NonFiniteState on overflow and InvalidArgument on bad options.
Trajectory integrate(const ModelParams& params, const DensityField& init, const IntegrateOptions& options);

double trapezoid_mass(const Grid& grid, std::span<const double> values);
double l2_norm(const Grid& grid, std::span<const double> values);

/// Per adjacent frame pair: d/dt of the trapezoid mass minus the balance
/// right-hand side at midpoint values.
std::vector<double> mass_balance_residual(std::span<const DensityField> trajectory, const ModelParams& params);

struct EigenPair {
  double E = 0.0;
  std::vector<double> vector;
};

/// The m algebraically largest eigenpairs, sorted descending.
std::vector<EigenPair> leading_eigenpairs(const TridiagonalOperator& op, int m);

struct TimeWindow {
  double t0 = 0.0;
  double t1 = 0.0;
};

/// Least-squares slope of log ||rho - reference|| over the window, with no
/// monotonicity requirement.
double fit_log_slope(std::span<const DensityField> trajectory, const DensityField& reference, TimeWindow window);

/// As fit_log_slope, but throws NonDecayingSignal unless the norm decreases
/// strictly across the window.
double fit_decay_rate(std::span<const DensityField> trajectory, const DensityField& reference, TimeWindow window);

}  // namespace rdline
