#include "rdline/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "rdline/error.hpp"

namespace rdline {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

struct Rates {
  double bt, btp, L;
};

// F(k)/k on the imaginary axis q = i k, with the k -> 0 limit built in.
double axis_function(const Rates& r, double k) {
  const double kl = k * r.L;
  const double sinc_l = std::abs(kl) < 1e-8 ? r.L * (1.0 - kl * kl / 6.0) : std::sin(kl) / k;
  return (r.bt * r.btp - k * k) * sinc_l + (r.bt + r.btp) * std::cos(kl);
}

// det(q)/q for real q > 0.
double real_function(const Rates& r, double q) {
  const double e = std::exp(-2.0 * q * r.L);
  return ((-q - r.bt) * (q + r.btp) - (q - r.bt) * (-q + r.btp) * e) / q;
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double f_lo) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-13 * std::max(1.0, mid)) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Null vector of the boundary system taken from the row with larger norm.
std::pair<cd, cd> null_vector(const Rates& r, cd q) {
  const cd e = std::exp(-q * r.L);
  const cd r00 = -q - r.bt, r01 = (q - r.bt) * e;
  const cd r10 = (-q + r.btp) * e, r11 = q + r.btp;
  if (std::norm(r00) + std::norm(r01) >= std::norm(r10) + std::norm(r11)) return {r01, -r00};
  return {r11, -r10};
}

SpectralMode make_mode(const ModelParams& p, const Rates& r, double gamma2, cd q) {
  SpectralMode m;
  m.q = q;
  m.E = std::real(q * q) - gamma2;
  m.L = r.L;
  m.params = p;
  std::tie(m.B, m.B_p) = null_vector(r, q);
  return normalize_mode(m);
}

}  // namespace

std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::Fast: return "FAST";
    case Phase::SlowLeft: return "SLOW_LEFT";
    case Phase::SlowRight: return "SLOW_RIGHT";
  }
  return "UNKNOWN";
}

std::string_view to_string(TauKind k) noexcept {
  switch (k) {
    case TauKind::Finite: return "FINITE";
    case TauKind::Infinite: return "INFINITE";
    case TauKind::Unstable: return "UNSTABLE";
  }
  return "UNKNOWN";
}

std::string_view to_string(Side s) noexcept { return s == Side::Left ? "LEFT" : "RIGHT"; }

cd boundary_determinant(const ModelParams& params, cd q) {
  const DerivedParams d = derive(params);
  const double L = params.L.value();
  return (-q - d.tilde_beta) * (q + d.tilde_beta_p) -
         (q - d.tilde_beta) * (-q + d.tilde_beta_p) * std::exp(-2.0 * q * L);
}

std::vector<SpectralMode> find_modes(const ModelParams& params, int n_modes) {
  params.validate();
  if (params.L.is_infinite()) fail(ErrorCode::InvalidArgument, "find_modes needs a finite L");
  if (n_modes < 1) fail(ErrorCode::InvalidArgument, "n_modes must be at least 1");
  const DerivedParams d = derive(params);
  const Rates r{d.tilde_beta, d.tilde_beta_p, params.L.value()};
  std::vector<SpectralMode> modes;

  // q = 0 carries a mode only when the linear solution exp(ux/2)(1 + bt x)
  // satisfies both boundary conditions.
  const double g0 = axis_function(r, 0.0);
  const double g0_scale = std::abs(r.bt * r.btp) * r.L + std::abs(r.bt) + std::abs(r.btp) + 1.0;
  const bool zero_mode = std::abs(g0) <= 1e-12 * g0_scale;
  if (zero_mode) {
    SpectralMode m;
    m.E = -d.gamma2;
    m.L = r.L;
    m.params = params;
    m.linear = true;
    m.B = 1.0;
    m.B_p = r.bt;
    modes.push_back(normalize_mode(m));
  }

  // Real roots lie near -bt or -btp; exponentially small shifts at large L.
  const double q_max = std::max(std::abs(r.bt), std::abs(r.btp)) + 1.0;
  {
    const auto f = [&](double q) { return real_function(r, q); };
    const double step = std::min(kPi / (4.0 * r.L), q_max / 4000.0);
    double lo = step;
    double f_lo = f(lo);
    while (lo < q_max) {
      const double hi = std::min(lo + step, q_max);
      const double f_hi = f(hi);
      if (f_hi == 0.0 || (f_lo < 0.0) != (f_hi < 0.0)) {
        const double q = f_hi == 0.0 ? hi : bisect(f, lo, hi, f_lo);
        modes.push_back(make_mode(params, r, d.gamma2, cd(q, 0.0)));
      }
      lo = hi;
      f_lo = f_hi;
    }
  }

  // Imaginary roots q = i k with asymptotic spacing pi / L.
  const double k_step = kPi / (4.0 * r.L);
  const double k_max = (n_modes + 4) * kPi / r.L;
  {
    const auto f = [&](double k) { return axis_function(r, k); };
    double lo = 0.0;
    double f_lo = zero_mode ? f(k_step * 1e-3) : g0;
    while (lo < k_max) {
      const double hi = lo + k_step;
      const double f_hi = f(hi);
      if (f_hi == 0.0 || (f_lo != 0.0 && (f_lo < 0.0) != (f_hi < 0.0))) {
        const double k = f_hi == 0.0 ? hi : bisect(f, lo, hi, f_lo);
        modes.push_back(make_mode(params, r, d.gamma2, cd(0.0, k)));
      }
      lo = hi;
      f_lo = f_hi;
    }
  }

  if (static_cast<int>(modes.size()) < n_modes) {
    std::ostringstream msg;
    msg << "found " << modes.size() << " of " << n_modes << " modes below cutoff k = " << k_max
        << ", q = " << q_max;
    fail(ErrorCode::IncompleteSpectrum, msg.str());
  }
  std::sort(modes.begin(), modes.end(), [](const SpectralMode& a, const SpectralMode& b) { return a.E > b.E; });
  modes.resize(n_modes);
  return modes;
}

namespace {

cd mode_core(const SpectralMode& m, double x) {
  if (m.linear) return m.B + m.B_p * x;
  return m.B * std::exp(-m.q * x) + m.B_p * std::exp(m.q * (x - m.L));
}

}  // namespace

double mode_function(const SpectralMode& mode, double x) {
  return std::exp(0.5 * mode.params.u * x) * std::real(mode_core(mode, x));
}

double adjoint_mode_function(const SpectralMode& mode, double x) {
  return std::exp(-0.5 * mode.params.u * x) * std::real(mode_core(mode, x));
}

SpectralMode normalize_mode(const SpectralMode& mode) {
  const cd B = mode.B, Bp = mode.B_p;
  const double L = mode.L;
  cd integral;
  double scale;
  if (mode.linear) {
    integral = B * B * L + B * Bp * L * L + Bp * Bp * L * L * L / 3.0;
    scale = (std::norm(B) + std::norm(Bp) * L * L) * L;
  } else {
    const cd q = mode.q;
    integral = (B * B + Bp * Bp) * (1.0 - std::exp(-2.0 * q * L)) / (2.0 * q) + 2.0 * B * Bp * L * std::exp(-q * L);
    const double w = std::real(q);
    const double width = w * L > 1e-8 ? (1.0 - std::exp(-2.0 * w * L)) / (2.0 * w) : L;
    scale = (std::norm(B) + std::norm(Bp)) * width;
  }
  if (!(std::abs(integral) > 1e-12 * scale)) {
    std::ostringstream msg;
    msg << "integral of psi* psi is " << std::abs(integral) << " against scale " << scale;
    fail(ErrorCode::DegenerateNorm, msg.str());
  }
  cd c = 1.0 / std::sqrt(integral);
  // A real part at round-off level counts as zero so the tie rule applies.
  const cd nb = c * B;
  const bool real_tie = std::abs(std::real(nb)) <= 1e-14 * std::abs(nb);
  if (real_tie ? std::imag(nb) < 0.0 : std::real(nb) < 0.0) c = -c;
  SpectralMode out = mode;
  out.B = c * B;
  out.B_p = c * Bp;
  return out;
}

PhaseReport e_max_thermo(const ModelParams& params) {
  params.validate();
  const DerivedParams d = derive(params);
  PhaseReport rep;
  const double u = params.u;
  if (u < -2.0 * params.beta_p) {
    rep.phase = Phase::SlowRight;
    rep.E_m = -d.gamma2 + d.tilde_beta_p * d.tilde_beta_p;
    rep.controlling_boundary = Side::Right;
    rep.q_r = -d.tilde_beta_p;
  } else if (u > 2.0 * params.beta) {
    rep.phase = Phase::SlowLeft;
    rep.E_m = -d.gamma2 + d.tilde_beta * d.tilde_beta;
    rep.controlling_boundary = Side::Left;
    rep.q_r = -d.tilde_beta;
  } else {
    rep.phase = Phase::Fast;
    rep.E_m = -d.gamma2;
    rep.tie = u == -2.0 * params.beta_p || u == 2.0 * params.beta;
  }
  if (rep.E_m < 0.0) {
    rep.tau_kind = TauKind::Finite;
    rep.tau = -1.0 / rep.E_m;
  } else {
    rep.tau_kind = rep.E_m == 0.0 ? TauKind::Infinite : TauKind::Unstable;
  }
  return rep;
}

}  // namespace rdline
