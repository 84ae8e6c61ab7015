#include "rdline/numeric.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rdline/error.hpp"

namespace rdline {

Grid Grid::make(int N, double L) {
  if (N < 3) fail(ErrorCode::InvalidArgument, "grid needs at least 3 nodes");
  if (!(L > 0.0) || !std::isfinite(L)) fail(ErrorCode::InvalidArgument, "grid length must be positive and finite");
  return Grid{N, L, L / (N - 1)};
}

std::vector<double> TridiagonalOperator::apply(std::span<const double> psi) const {
  const int n = grid.N;
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    double v = diag[i] * psi[i];
    if (i > 0) v += sub[i] * psi[i - 1];
    if (i + 1 < n) v += sup[i] * psi[i + 1];
    out[i] = v;
  }
  return out;
}

TridiagonalOperator assemble_operator(const ModelParams& params, const Grid& grid) {
  params.validate();
  if (params.L.is_infinite()) fail(ErrorCode::InvalidArgument, "assemble_operator needs a finite L");
  if (std::abs(grid.L - params.L.value()) > 1e-12 * grid.L) {
    fail(ErrorCode::InvalidArgument, "grid length differs from the model length");
  }
  const double dx = grid.dx;
  const double u = params.u;
  if (!(std::abs(u) * dx / 2.0 < 1.0)) {
    std::ostringstream msg;
    msg << "cell Peclet number |u| dx / 2 = " << std::abs(u) * dx / 2.0 << " must be below 1; refine the grid";
    fail(ErrorCode::InvalidArgument, msg.str());
  }
  const int n = grid.N;
  const double idx2 = 1.0 / (dx * dx);
  TridiagonalOperator op{grid, params, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                         std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (int i = 1; i + 1 < n; ++i) {
    op.sub[i] = idx2 + u / (2.0 * dx);
    op.diag[i] = -2.0 * idx2 - params.a;
    op.sup[i] = idx2 - u / (2.0 * dx);
  }
  // Half cells at the walls: ghost-node diffusion, drift in flux form. The
  // trapezoid-weighted column sums then reproduce the mass balance exactly.
  op.sup[0] = 2.0 * idx2 - u / dx;
  op.diag[0] = -2.0 * idx2 + u / dx - 2.0 * params.beta / dx - params.a;
  op.affine[0] = 2.0 * params.alpha / dx;
  op.sub[n - 1] = 2.0 * idx2 + u / dx;
  op.diag[n - 1] = -2.0 * idx2 - u / dx - 2.0 * params.beta_p / dx - params.a;
  op.affine[n - 1] = 2.0 * params.alpha_p / dx;
  return op;
}

namespace {

// Thomas algorithm for a general tridiagonal system, in place on rhs.
void thomas_solve(const std::vector<double>& sub, const std::vector<double>& diag, const std::vector<double>& sup,
                  std::vector<double>& rhs) {
  const int n = static_cast<int>(diag.size());
  std::vector<double> c(n);
  double pivot = diag[0];
  if (pivot == 0.0) fail(ErrorCode::SingularSystem, "zero pivot in tridiagonal solve");
  c[0] = sup[0] / pivot;
  rhs[0] /= pivot;
  for (int i = 1; i < n; ++i) {
    pivot = diag[i] - sub[i] * c[i - 1];
    if (pivot == 0.0) fail(ErrorCode::SingularSystem, "zero pivot in tridiagonal solve");
    c[i] = i + 1 < n ? sup[i] / pivot : 0.0;
    rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / pivot;
  }
  for (int i = n - 2; i >= 0; --i) rhs[i] -= c[i] * rhs[i + 1];
}

}  // namespace

std::vector<double> discrete_stationary(const TridiagonalOperator& op, std::span<const double> source) {
  std::vector<double> rhs(op.affine.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -op.affine[i] - (source.empty() ? 0.0 : source[i]);
  thomas_solve(op.sub, op.diag, op.sup, rhs);
  return rhs;
}

ThetaStepper::ThetaStepper(const TridiagonalOperator& op, double dt, double theta)
    : op_(op), dt_(dt), theta_(theta) {
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorCode::InvalidArgument, "dt must be positive");
  if (!(theta >= 0.0 && theta <= 1.0)) fail(ErrorCode::InvalidArgument, "theta must lie in [0, 1]");
  const int n = op.grid.N;
  lower_.assign(n, 0.0);
  upper_.assign(n, 0.0);
  inv_pivot_.assign(n, 0.0);
  // LU of (I - theta dt H), stored as multipliers and inverse pivots.
  const double s = theta * dt;
  double prev_upper = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = i > 0 ? -s * op.sub[i] : 0.0;
    const double b = 1.0 - s * op.diag[i];
    const double c = i + 1 < n ? -s * op.sup[i] : 0.0;
    const double pivot = b - a * prev_upper;
    if (pivot == 0.0 || !std::isfinite(pivot)) fail(ErrorCode::SingularSystem, "implicit matrix is singular");
    lower_[i] = a;
    inv_pivot_[i] = 1.0 / pivot;
    upper_[i] = c * inv_pivot_[i];
    prev_upper = upper_[i];
  }
}

void ThetaStepper::solve(std::vector<double>& rhs) const {
  const int n = op_.grid.N;
  rhs[0] *= inv_pivot_[0];
  for (int i = 1; i < n; ++i) rhs[i] = (rhs[i] - lower_[i] * rhs[i - 1]) * inv_pivot_[i];
  for (int i = n - 2; i >= 0; --i) rhs[i] -= upper_[i] * rhs[i + 1];
}

void ThetaStepper::explicit_part(std::span<const double> rho, std::vector<double>& out) const {
  const int n = op_.grid.N;
  out.resize(n);
  const double s = (1.0 - theta_) * dt_;
  for (int i = 0; i < n; ++i) {
    double h = op_.diag[i] * rho[i];
    if (i > 0) h += op_.sub[i] * rho[i - 1];
    if (i + 1 < n) h += op_.sup[i] * rho[i + 1];
    out[i] = rho[i] + s * h + dt_ * op_.affine[i];
  }
}

void ThetaStepper::step(std::vector<double>& rho, std::span<const double> forcing) const {
  std::vector<double> rhs;
  explicit_part(rho, rhs);
  if (!forcing.empty()) {
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += dt_ * forcing[i];
  }
  solve(rhs);
  rho.swap(rhs);
}

namespace {

void check_finite(const std::vector<double>& v, double t) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || std::abs(v[i]) > 1e300) {
      std::ostringstream msg;
      msg << "density at node " << i << " is " << v[i] << " at t = " << t;
      fail(ErrorCode::NonFiniteState, msg.str());
    }
  }
}

}  // namespace

Trajectory integrate(const ModelParams& params, const DensityField& init, const IntegrateOptions& options) {
  const Grid& grid = init.grid;
  if (static_cast<int>(init.values.size()) != grid.N) {
    fail(ErrorCode::InvalidArgument, "initial field length does not match the grid");
  }
  if (!(options.T >= 0.0) || !std::isfinite(options.T)) fail(ErrorCode::InvalidArgument, "T must be nonnegative");
  if (options.stride < 1) fail(ErrorCode::InvalidArgument, "stride must be at least 1");
  const TridiagonalOperator op = assemble_operator(params, grid);
  const ThetaStepper stepper(op, options.dt, options.theta);
  const long steps = std::lround(options.T / options.dt);
  if (std::abs(steps * options.dt - options.T) > 1e-9 * std::max(1.0, options.T)) {
    fail(ErrorCode::InvalidArgument, "T must be an integer multiple of dt");
  }

  Trajectory frames;
  DensityField current = init;
  check_finite(current.values, current.t);
  auto keep = [&](const DensityField& f) {
    if (options.observer) options.observer(f);
    if (options.store_frames) frames.push_back(f);
  };
  keep(current);

  std::vector<double> forcing;
  std::vector<double> next_source;
  const double theta = options.theta;
  auto sample_source = [&](double t, std::vector<double>& out) {
    out.resize(grid.N);
    for (int i = 0; i < grid.N; ++i) out[i] = options.source(t, grid.x(i));
  };
  if (options.source) sample_source(init.t, next_source);

  for (long n = 0; n < steps; ++n) {
    const double t1 = init.t + (n + 1) * options.dt;
    if (options.source) {
      forcing = next_source;
      sample_source(t1, next_source);
      for (int i = 0; i < grid.N; ++i) forcing[i] = (1.0 - theta) * forcing[i] + theta * next_source[i];
    }
    stepper.step(current.values, forcing);
    current.t = t1;
    check_finite(current.values, t1);
    if ((n + 1) % options.stride == 0 || n + 1 == steps) keep(current);
  }
  return frames;
}

double trapezoid_mass(const Grid& grid, std::span<const double> values) {
  double s = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
  return s * grid.dx;
}

double l2_norm(const Grid& grid, std::span<const double> values) {
  // Scaled by the largest entry so tiny amplitudes do not underflow when squared.
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  auto sq = [scale](double v) { return (v / scale) * (v / scale); };
  double s = 0.5 * (sq(values.front()) + sq(values.back()));
  for (std::size_t i = 1; i + 1 < values.size(); ++i) s += sq(values[i]);
  return scale * std::sqrt(s * grid.dx);
}

std::vector<double> mass_balance_residual(std::span<const DensityField> trajectory, const ModelParams& params) {
  if (trajectory.size() < 2) fail(ErrorCode::InvalidArgument, "mass balance needs at least two frames");
  std::vector<double> out;
  out.reserve(trajectory.size() - 1);
  for (std::size_t k = 0; k + 1 < trajectory.size(); ++k) {
    const DensityField& f0 = trajectory[k];
    const DensityField& f1 = trajectory[k + 1];
    const double m0 = trapezoid_mass(f0.grid, f0.values);
    const double m1 = trapezoid_mass(f1.grid, f1.values);
    const double rho0 = 0.5 * (f0.values.front() + f1.values.front());
    const double rhoL = 0.5 * (f0.values.back() + f1.values.back());
    const double rate = (m1 - m0) / (f1.t - f0.t);
    out.push_back(rate - mass_balance_rhs(params, rho0, rhoL, 0.5 * (m0 + m1)));
  }
  return out;
}

namespace {

std::vector<EigenPair> dense_eigenpairs(const TridiagonalOperator& op, int m) {
  const int n = op.grid.N;
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    a[static_cast<std::size_t>(i) * n + i] = op.diag[i];
    if (i > 0) a[static_cast<std::size_t>(i) * n + i - 1] = op.sub[i];
    if (i + 1 < n) a[static_cast<std::size_t>(i) * n + i + 1] = op.sup[i];
  }
  std::vector<double> wr(n), wi(n), vr(static_cast<std::size_t>(n) * n);
  const lapack_int info = LAPACKE_dgeev(LAPACK_ROW_MAJOR, 'N', 'V', n, a.data(), n, wr.data(), wi.data(), nullptr,
                                        n, vr.data(), n);
  if (info != 0) {
    std::ostringstream msg;
    msg << "dgeev returned info = " << info;
    fail(ErrorCode::ConvergenceFailure, msg.str());
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return wr[x] > wr[y]; });
  std::vector<EigenPair> out;
  for (int k = 0; k < m; ++k) {
    const int j = order[k];
    if (std::abs(wi[j]) > 1e-10 * std::max(1.0, std::abs(wr[j]))) {
      std::ostringstream msg;
      msg << "eigenvalue " << wr[j] << " has imaginary part " << wi[j];
      fail(ErrorCode::ConvergenceFailure, msg.str());
    }
    EigenPair p{wr[j], std::vector<double>(n)};
    for (int i = 0; i < n; ++i) p.vector[i] = vr[static_cast<std::size_t>(i) * n + j];
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<EigenPair> leading_eigenpairs(const TridiagonalOperator& op, int m) {
  const int n = op.grid.N;
  if (m < 1 || m > n) fail(ErrorCode::InvalidArgument, "eigenpair count must lie in [1, N]");

  bool symmetrizable = true;
  for (int i = 0; i + 1 < n; ++i) symmetrizable = symmetrizable && op.sup[i] * op.sub[i + 1] > 0.0;
  if (!symmetrizable) return dense_eigenpairs(op, m);

  // S = D H D^-1 with (d[i+1]/d[i])^2 = sup[i] / sub[i+1]; kept in log form.
  std::vector<double> d(op.diag), e(n - 1), log_scale(n, 0.0);
  for (int i = 0; i + 1 < n; ++i) {
    e[i] = std::sqrt(op.sup[i] * op.sub[i + 1]);
    log_scale[i + 1] = log_scale[i] + 0.5 * std::log(op.sup[i] / op.sub[i + 1]);
  }
  lapack_int found = 0;
  std::vector<double> w(n), z(static_cast<std::size_t>(n) * m);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(m));
  const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0, n - m + 1, n,
                                         0.0, &found, w.data(), z.data(), n, support.data());
  if (info != 0 || found != m) {
    std::ostringstream msg;
    msg << "dstevr returned info = " << info << " with " << found << " of " << m << " eigenvalues";
    fail(ErrorCode::ConvergenceFailure, msg.str());
  }
  std::vector<EigenPair> out;
  for (int k = m - 1; k >= 0; --k) {
    EigenPair p{w[k], std::vector<double>(n)};
    double peak = 0.0;
    const double shift = *std::min_element(log_scale.begin(), log_scale.end());
    for (int i = 0; i < n; ++i) {
      p.vector[i] = z[static_cast<std::size_t>(k) * n + i] * std::exp(shift - log_scale[i]);
      peak = std::max(peak, std::abs(p.vector[i]));
    }
    if (peak > 0.0) {
      for (double& v : p.vector) v /= peak;
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

struct WindowSeries {
  std::vector<double> t, log_norm;
};

WindowSeries window_series(std::span<const DensityField> trajectory, const DensityField& reference, TimeWindow window) {
  WindowSeries s;
  std::vector<double> diff(reference.values.size());
  for (const DensityField& f : trajectory) {
    if (f.t < window.t0 - 1e-12 || f.t > window.t1 + 1e-12) continue;
    if (f.values.size() != reference.values.size()) fail(ErrorCode::InvalidArgument, "frame length differs from reference");
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = f.values[i] - reference.values[i];
    const double norm = l2_norm(f.grid, diff);
    if (!(norm > 0.0)) fail(ErrorCode::NonDecayingSignal, "deviation from the reference vanishes inside the window");
    s.t.push_back(f.t);
    s.log_norm.push_back(std::log(norm));
  }
  if (s.t.size() < 2) fail(ErrorCode::InvalidArgument, "fewer than two frames inside the fit window");
  return s;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

double fit_log_slope(std::span<const DensityField> trajectory, const DensityField& reference, TimeWindow window) {
  const WindowSeries s = window_series(trajectory, reference, window);
  return least_squares_slope(s.t, s.log_norm);
}

double fit_decay_rate(std::span<const DensityField> trajectory, const DensityField& reference, TimeWindow window) {
  const WindowSeries s = window_series(trajectory, reference, window);
  for (std::size_t i = 1; i < s.t.size(); ++i) {
    if (!(s.log_norm[i] < s.log_norm[i - 1])) {
      std::ostringstream msg;
      msg << "norm does not decrease between t = " << s.t[i - 1] << " and t = " << s.t[i];
      fail(ErrorCode::NonDecayingSignal, msg.str());
    }
  }
  return least_squares_slope(s.t, s.log_norm);
}

}  // namespace rdline
