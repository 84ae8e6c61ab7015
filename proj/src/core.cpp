#include "rdline/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdline/error.hpp"

namespace rdline {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutsideValidity: return "OutsideValidity";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::OscillatoryGamma: return "OscillatoryGamma";
    case ErrorCode::AmbiguousCase: return "AmbiguousCase";
    case ErrorCode::UndefinedAtTZero: return "UndefinedAtTZero";
    case ErrorCode::ZeroBulkRate: return "ZeroBulkRate";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::IncompleteSpectrum: return "IncompleteSpectrum";
    case ErrorCode::DegenerateNorm: return "DegenerateNorm";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::NonDecayingSignal: return "NonDecayingSignal";
    case ErrorCode::InvalidMoments: return "InvalidMoments";
    case ErrorCode::UnstableParams: return "UnstableParams";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

Length Length::finite(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << "domain length must be positive and finite, got " << value;
    fail(ErrorCode::InvalidArgument, msg.str());
  }
  Length len;
  len.value_ = value;
  len.infinite_ = false;
  return len;
}

double Length::value() const {
  if (infinite_) fail(ErrorCode::OutsideValidity, "finite length requested for the thermodynamic limit");
  return value_;
}

void ModelParams::validate() const {
  auto require_finite = [](double v, const char* name) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, std::string(name) + " is not finite");
  };
  require_finite(u, "u");
  require_finite(a, "a");
  const std::pair<double, const char*> rates[] = {
      {alpha, "alpha"}, {beta, "beta"}, {alpha_p, "alpha_p"}, {beta_p, "beta_p"}};
  for (const auto& [v, name] : rates) {
    require_finite(v, name);
    if (v < 0.0) fail(ErrorCode::InvalidArgument, std::string(name) + " must be nonnegative");
  }
}

ModelParams ModelParams::mirrored() const {
  ModelParams m = *this;
  m.u = -u;
  m.alpha = alpha_p;
  m.beta = beta_p;
  m.alpha_p = alpha;
  m.beta_p = beta;
  return m;
}

ModelParams ModelParams::thermodynamic() const {
  ModelParams m = *this;
  m.L = Length::infinite();
  return m;
}

double DerivedParams::gamma() const {
  if (!gamma_) {
    std::ostringstream msg;
    msg << "gamma^2 = " << gamma2 << " < 0, gamma is imaginary";
    fail(ErrorCode::OscillatoryGamma, msg.str());
  }
  return *gamma_;
}

DerivedParams derive(const ModelParams& params) {
  DerivedParams d;
  d.gamma2 = params.a + 0.25 * params.u * params.u;
  d.tilde_beta = params.beta - 0.5 * params.u;
  d.tilde_beta_p = params.beta_p + 0.5 * params.u;
  if (d.gamma2 >= 0.0) d.gamma_ = std::sqrt(d.gamma2);
  return d;
}

ExistenceReport stationary_exists(const ModelParams& params) {
  const DerivedParams d = derive(params);
  ExistenceReport r;
  const double quarter_u2 = 0.25 * params.u * params.u;
  r.threshold = std::max(-quarter_u2 + d.tilde_beta * d.tilde_beta,
                         -quarter_u2 + d.tilde_beta_p * d.tilde_beta_p);
  r.exists = params.a > r.threshold;
  r.gamma_real = d.gamma2 > 0.0;
  if (r.gamma_real) {
    const double g = d.gamma();
    r.left_positive = d.tilde_beta + g > 0.0;
    r.right_positive = d.tilde_beta_p + g > 0.0;
  }
  return r;
}

std::string ExistenceReport::diagnostic() const {
  std::ostringstream out;
  out << (exists ? "stationary state exists" : "no stationary state")
      << " (a must exceed " << threshold << ")";
  if (!gamma_real) out << "; gamma is not real";
  if (gamma_real && !left_positive) out << "; tilde_beta + gamma <= 0";
  if (gamma_real && !right_positive) out << "; tilde_beta_p + gamma <= 0";
  if (!exists && positive_profile()) out << "; positivity conditions hold individually";
  return out.str();
}

double mass_balance_rhs(const ModelParams& params, double rho0, double rhoL, double total_mass) {
  return params.alpha_p - params.beta_p * rhoL + params.alpha - params.beta * rho0 -
         params.u * rhoL + params.u * rho0 - params.a * total_mass;
}

}  // namespace rdline
