#include "rdline/analytic.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "linalg2.hpp"
#include "quadrature.hpp"
#include "rdline/error.hpp"
#include "rdline/special.hpp"

namespace rdline {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

void require_finite_length(const ModelParams& p, const char* op) {
  if (p.L.is_infinite()) fail(ErrorCode::InvalidArgument, std::string(op) + " needs a finite L");
}

void require_infinite_length(const ModelParams& p, const char* op) {
  if (p.L.is_finite()) fail(ErrorCode::InvalidArgument, std::string(op) + " needs L = inf");
}

void require_position(double x, const char* name) {
  if (!std::isfinite(x) || x < 0.0) {
    std::ostringstream msg;
    msg << name << " = " << x << " must be finite and nonnegative";
    fail(ErrorCode::InvalidArgument, msg.str());
  }
}

double positive_gamma(const DerivedParams& d) {
  if (!(d.gamma2 > 0.0)) {
    std::ostringstream msg;
    msg << "gamma^2 = " << d.gamma2 << " must be positive";
    fail(ErrorCode::OscillatoryGamma, msg.str());
  }
  return d.gamma();
}

bool is_zero(double v, double scale) { return std::abs(v) <= 1e-14 * (1.0 + std::abs(scale)); }

// Rows of the stationary amplitude system, shared by the profile and G1.
std::array<double, 2> solve_amplitudes(const ModelParams& p, double r0, double r1, const char* what) {
  const DerivedParams d = derive(p);
  const double g = d.gamma();
  const double L = p.L.value();
  const double m00 = d.tilde_beta + g;
  const double m01 = (d.tilde_beta - g) * std::exp(-(0.5 * p.u + g) * L);
  const double m10 = (d.tilde_beta_p - g) * std::exp((0.5 * p.u - g) * L);
  const double m11 = d.tilde_beta_p + g;
  return detail::solve_2x2(m00, m01, m10, m11, r0, r1, what);
}

}  // namespace

std::string_view to_string(StationaryCase c) noexcept {
  switch (c) {
    case StationaryCase::FiniteL: return "FINITE_L";
    case StationaryCase::CaseI: return "CASE_I";
    case StationaryCase::CaseII: return "CASE_II";
    case StationaryCase::CaseIII: return "CASE_III";
  }
  return "UNKNOWN";
}

std::string_view to_string(G2Regime r) noexcept {
  switch (r) {
    case G2Regime::NegativeTildeBeta: return "NEGATIVE_TILDE_BETA";
    case G2Regime::ZeroTildeBetaDrift: return "ZERO_TILDE_BETA_DRIFT";
    case G2Regime::ZeroTildeBetaNoDrift: return "ZERO_TILDE_BETA_NO_DRIFT";
    case G2Regime::PositiveTildeBeta: return "POSITIVE_TILDE_BETA";
  }
  return "UNKNOWN";
}

StationaryProfile::StationaryProfile(ModelParams params, StationaryCase tag, double A, double A_p)
    : params_(params), tag_(tag), A_(A), A_p_(A_p), gamma_(derive(params).gamma()) {}

double StationaryProfile::operator()(double x) const {
  const double left = A_ * std::exp((0.5 * params_.u - gamma_) * x);
  switch (tag_) {
    case StationaryCase::FiniteL:
      return left + A_p_ * std::exp((0.5 * params_.u + gamma_) * (x - params_.L.value()));
    case StationaryCase::CaseI:
    case StationaryCase::CaseII:
      return left;
    case StationaryCase::CaseIII:
      break;
  }
  fail(ErrorCode::OutsideValidity, "CASE_III profile is referenced from the right wall");
}

double StationaryProfile::from_right(double y) const {
  const double right = A_p_ * std::exp(-(0.5 * params_.u + gamma_) * y);
  switch (tag_) {
    case StationaryCase::FiniteL:
      return (*this)(params_.L.value() - y);
    case StationaryCase::CaseI:
    case StationaryCase::CaseIII:
      return right;
    case StationaryCase::CaseII:
      break;
  }
  fail(ErrorCode::OutsideValidity, "CASE_II profile is referenced from the left wall");
}

StationaryProfile stationary_finite(const ModelParams& params) {
  params.validate();
  require_finite_length(params, "stationary_finite");
  positive_gamma(derive(params));
  const auto [A, A_p] = solve_amplitudes(params, params.alpha, params.alpha_p, "stationary amplitudes");
  return StationaryProfile(params, StationaryCase::FiniteL, A, A_p);
}

StationaryProfile stationary_thermo(const ModelParams& params) {
  params.validate();
  require_infinite_length(params, "stationary_thermo");
  const DerivedParams d = derive(params);
  const double g = positive_gamma(d);
  const double half_u = 0.5 * params.u;
  if (g == std::abs(half_u)) {
    std::ostringstream msg;
    msg << "gamma = |u/2| = " << g << " lies on the boundary between cases";
    fail(ErrorCode::AmbiguousCase, msg.str());
  }
  const ExistenceReport report = stationary_exists(params);
  if (!report.positive_profile()) fail(ErrorCode::OutsideValidity, report.diagnostic());

  const double left = params.alpha / (d.tilde_beta + g);
  const double right = params.alpha_p / (d.tilde_beta_p + g);
  if (g > std::abs(half_u)) return StationaryProfile(params, StationaryCase::CaseI, left, right);
  if (g < half_u) return StationaryProfile(params, StationaryCase::CaseII, left, -left);
  return StationaryProfile(params, StationaryCase::CaseIII, -right, right);
}

GreenEval green_thermo(const ModelParams& params, double t, double x, double x_p) {
  params.validate();
  require_infinite_length(params, "green_thermo");
  require_position(x, "x");
  require_position(x_p, "x_p");
  if (!std::isfinite(t)) fail(ErrorCode::InvalidArgument, "t must be finite");

  GreenEval out;
  out.t = t;
  out.x = x;
  out.x_p = x_p;
  if (t < 0.0) return out;
  if (t == 0.0) fail(ErrorCode::UndefinedAtTZero, "G(0; x, x') is a delta distribution");

  const DerivedParams d = derive(params);
  const double bt = d.tilde_beta;
  const double xi = x - x_p;
  const double X = x + x_p;
  const double sqrt_t = std::sqrt(t);
  const double norm = 1.0 / std::sqrt(4.0 * kPi * t);
  const double log_pre = 0.5 * params.u * xi - d.gamma2 * t;
  const double z = (X + 2.0 * bt * t) / (2.0 * sqrt_t);

  // log of exp(bt X + bt^2 t) erfc(z), routed through erfcx when z >= 0.
  const double log_boundary = z >= 0.0 ? -X * X / (4.0 * t) + std::log(erfcx(z))
                                        : bt * X + bt * bt * t + std::log(std::erfc(z));

  out.prefactor = std::exp(log_pre);
  out.free = norm * std::exp(-xi * xi / (4.0 * t));
  out.image = norm * std::exp(-X * X / (4.0 * t));
  out.boundary = bt == 0.0 ? 0.0 : -bt * std::exp(log_boundary);
  out.value = norm * (std::exp(log_pre - xi * xi / (4.0 * t)) + std::exp(log_pre - X * X / (4.0 * t)));
  if (bt != 0.0) out.value -= bt * std::exp(log_pre + log_boundary);
  return out;
}

G1Profile::G1Profile(ModelParams params, double A1, double A1_p)
    : params_(params), A1_(A1), A1_p_(A1_p), gamma_(derive(params).gamma()) {}

double G1Profile::operator()(double x) const {
  const double half_u = 0.5 * params_.u;
  return 1.0 / params_.a + A1_ * std::exp((half_u - gamma_) * x) +
         A1_p_ * std::exp((half_u + gamma_) * (x - params_.L.value()));
}

G1Profile g1_finite(const ModelParams& params) {
  params.validate();
  require_finite_length(params, "g1_finite");
  if (params.a == 0.0) fail(ErrorCode::ZeroBulkRate, "G1 divides by a = 0");
  positive_gamma(derive(params));
  const auto [A1, A1_p] =
      solve_amplitudes(params, -params.beta / params.a, -params.beta_p / params.a, "G1 amplitudes");
  return G1Profile(params, A1, A1_p);
}

double g1_thermo(const ModelParams& params, double x) {
  params.validate();
  require_infinite_length(params, "g1_thermo");
  require_position(x, "x");
  if (params.a == 0.0) fail(ErrorCode::ZeroBulkRate, "G1 divides by a = 0");
  if (params.a < 0.0) fail(ErrorCode::OutsideValidity, "thermodynamic G1 is restricted to a > 0");
  const DerivedParams d = derive(params);
  const double g = positive_gamma(d);
  if (!(d.tilde_beta + g > 0.0)) fail(ErrorCode::OutsideValidity, "tilde_beta + gamma must be positive");
  return (1.0 - params.beta / (d.tilde_beta + g) * std::exp(-(g - 0.5 * params.u) * x)) / params.a;
}

namespace {

struct G2Setup {
  double u, beta, bt, gamma2, gamma;
};

// Bound-state contribution without the exp(-gamma^2 t) factor, evaluated
// with exp(tilde_beta^2 t) folded in through `log_time`.
double g2_bound(const G2Setup& s, double log_time, double x1, double x2) {
  const double rb = std::sqrt(2.0 * s.gamma2 - s.bt * s.bt);
  const double den = s.u * (s.u - 2.0 * s.bt) - 2.0 * s.gamma2 + 2.0 * s.bt * s.bt;
  const double den_scale = s.u * s.u + 2.0 * std::abs(s.u * s.bt) + 2.0 * s.gamma2 + 2.0 * s.bt * s.bt;
  if (std::abs(den) <= 1e-12 * den_scale) {
    fail(ErrorCode::DegenerateDenominator, "bound-state denominator u(u - 2 tilde_beta) - 2 gamma^2 + 2 tilde_beta^2 vanishes");
  }
  const double braces = s.u / (s.bt + rb) * std::exp((0.5 * s.u - rb) * x2) -
                        std::exp((s.bt - 0.5 * s.u) * x2);
  return -2.0 * s.bt / den * std::exp(s.beta * x1 + log_time) * braces;
}

// Continuum integrand over k in (0, inf), including the 2/pi weight and
// the exp(-k^2 t) factor.
struct ContinuumIntegrand {
  G2Setup s;
  double t, x1, x2;

  double operator()(double k) const {
    const double phi = std::atan2(k, s.bt);
    const double r = std::sqrt(2.0 * s.gamma2 + k * k);
    const cd i(0.0, 1.0);
    const cd den = s.u * (s.u + 2.0 * i * k) - 2.0 * s.gamma2 - 2.0 * k * k;
    const cd t1 = i * (s.bt + s.u + i * k) / (s.bt + r) * std::exp((0.5 * s.u - r) * x2 - i * phi);
    const cd t2 = -i * std::exp(-(0.5 * s.u + i * k) * x2 - i * phi);
    const double amp = std::exp(0.5 * s.u * x1 - k * k * t) * std::sin(k * x1 + phi);
    return 2.0 / kPi * std::real(amp / den * (t1 + t2));
  }
};

// Slowly decaying part of the t = 0 integrand with a closed-form integral:
// (1/pi) exp(u (x1 - x2)/2) sin(k x1 + phi) sin(k x2 + phi) / (k^2 + m^2).
struct SubtractionModel {
  G2Setup s;
  double x1, x2, m;

  double operator()(double k) const {
    const double phi = std::atan2(k, s.bt);
    return std::exp(0.5 * s.u * (x1 - x2)) / kPi * std::sin(k * x1 + phi) * std::sin(k * x2 + phi) /
           (k * k + m * m);
  }

  double integral() const {
    const double xi = std::abs(x1 - x2);
    const double X = x1 + x2;
    double J = std::exp(-m * xi) / (4.0 * m) -
               0.25 * std::exp(-m * X) * (s.bt - m) / (m * (s.bt + m));
    if (s.bt < 0.0) J += s.bt * std::exp(s.bt * X) / (m * m - s.bt * s.bt);
    return std::exp(0.5 * s.u * (x1 - x2)) * J;
  }
};

[[noreturn]] void quadrature_failure(const char* what, double value, double error, double cutoff) {
  std::ostringstream msg;
  msg << what << ": estimate " << value << ", error " << error << ", cutoff k = " << cutoff;
  fail(ErrorCode::QuadratureFailure, msg.str());
}

double g2_continuum(const G2Setup& s, double t, double x1, double x2) {
  constexpr double kRelTol = 1e-8;
  const ContinuumIntegrand f{s, t, x1, x2};
  const double panel = std::min(1.0, kPi / (2.0 * (x1 + x2) + 1.0));

  if (t > 0.0) {
    const double k_max = std::sqrt(40.0 / t);
    const auto res = detail::integrate_panels(f, 0.0, k_max, panel);
    if (!std::isfinite(res.value) || res.error > kRelTol * res.l1) {
      quadrature_failure("G2 continuum", res.value, res.error, k_max);
    }
    return res.value;
  }

  double m = s.gamma;
  if (std::abs(m - std::abs(s.bt)) < 1e-3) m += 1.0;
  const SubtractionModel model{s, x1, x2, m};
  const auto remainder = [&](double k) { return f(k) - model(k); };

  double total = model.integral();
  double k_lo = 0.0;
  double k_hi = 200.0;
  double increment = 0.0;
  for (int round = 0; round < 8; ++round) {
    const auto res = detail::integrate_panels(remainder, k_lo, k_hi, panel);
    if (!std::isfinite(res.value)) break;
    increment = res.value;
    total += res.value;
    if (round > 0 && std::abs(increment) <= kRelTol * std::max(std::abs(total), 1e-300)) return total;
    k_lo = k_hi;
    k_hi *= 2.0;
  }
  quadrature_failure("G2 continuum at t = 0", total, std::abs(increment), k_lo);
}

G2Setup g2_setup(const ModelParams& params, double t, const char* op) {
  params.validate();
  require_infinite_length(params, op);
  if (!std::isfinite(t) || t < 0.0) fail(ErrorCode::InvalidArgument, "G2 needs t >= 0");
  const DerivedParams d = derive(params);
  const double g = positive_gamma(d);
  return {params.u, params.beta, d.tilde_beta, d.gamma2, g};
}

}  // namespace

double g2_thermo_quadrature(const ModelParams& params, double t, double x1, double x2) {
  const G2Setup s = g2_setup(params, t, "g2_thermo_quadrature");
  require_position(x1, "x1");
  require_position(x2, "x2");
  if (is_zero(s.bt, s.beta) && is_zero(s.u * s.u - 2.0 * s.gamma2, s.gamma2)) {
    fail(ErrorCode::DegenerateDenominator, "u^2 = 2 gamma^2 with tilde_beta = 0 puts a pole at k = 0");
  }
  double bound = 0.0;
  if (s.bt < 0.0) {
    if (!(s.gamma > -s.bt)) {
      std::ostringstream msg;
      msg << "bound state with tilde_beta^2 = " << s.bt * s.bt << " >= gamma^2 = " << s.gamma2
          << " does not decay";
      fail(ErrorCode::UnstableParams, msg.str());
    }
    bound = g2_bound(s, (s.bt * s.bt - s.gamma2) * t, x1, x2);
  }
  return bound + std::exp(-s.gamma2 * t) * g2_continuum(s, t, x1, x2);
}

G2Asymptotic g2_asymptotic(const ModelParams& params, double t, double x1, double x2) {
  const G2Setup s = g2_setup(params, t, "g2_asymptotic");
  require_position(x1, "x1");
  require_position(x2, "x2");
  if (t == 0.0) fail(ErrorCode::InvalidArgument, "asymptotic G2 needs t > 0");

  G2Asymptotic out;
  if (!is_zero(s.bt, s.beta) && s.bt < 0.0) {
    if (2.0 * s.gamma2 < s.bt * s.bt) {
      fail(ErrorCode::OutsideValidity, "2 gamma^2 < tilde_beta^2 makes the bound-state root complex");
    }
    out.regime = G2Regime::NegativeTildeBeta;
    out.value = g2_bound(s, (s.bt * s.bt - s.gamma2) * t, x1, x2);
    return out;
  }

  const double denom = s.u * s.u - 2.0 * s.gamma2;
  if (is_zero(denom, s.gamma2)) {
    fail(ErrorCode::DegenerateDenominator, "u^2 = 2 gamma^2 makes the asymptotic prefactor singular");
  }
  const double xi = x1 - x2;
  const double X = x1 + x2;
  const double norm = 1.0 / std::sqrt(4.0 * kPi * t);
  if (is_zero(s.bt, s.beta)) {
    if (s.u > 0.0) {
      const double root = std::sqrt(2.0 * s.gamma2);
      out.regime = G2Regime::ZeroTildeBetaDrift;
      out.value = 1.0 / (std::sqrt(kPi * t) * denom) *
                  std::exp(-x1 * x1 / (4.0 * t) + 0.5 * s.u * x1 - s.gamma2 * t) *
                  (s.u / root * std::exp((0.5 * s.u - root) * x2) - std::exp(-0.5 * s.u * x2));
    } else {
      out.regime = G2Regime::ZeroTildeBetaNoDrift;
      out.value = norm / (2.0 * s.gamma2) * std::exp(-s.gamma2 * t) *
                  (std::exp(-xi * xi / (4.0 * t)) + std::exp(-X * X / (4.0 * t)));
    }
    return out;
  }
  out.regime = G2Regime::PositiveTildeBeta;
  out.value = norm / -denom * std::exp(0.5 * s.u * xi - s.gamma2 * t) *
              (std::exp(-xi * xi / (4.0 * t)) - std::exp(-X * X / (4.0 * t)));
  return out;
}

}  // namespace rdline
