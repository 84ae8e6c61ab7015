#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rdline/core.hpp"
#include "rdline/error.hpp"
#include "rdline/stochastic.hpp"

namespace rdline {

/// Error raised while reading a config, with the 1-based line and the key
/// involved when known.
class ConfigError : public Error {
 public:
  ConfigError(ErrorCode code, int line, std::string key, const std::string& what);
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

/// Parameter sweep "name lo hi step"; `name` is a model parameter.
struct SweepAxis {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;

  std::vector<double> values() const;
};

struct GreenSample {
  double t = 0.0;
  double x = 0.0;
  double x_p = 0.0;
};

enum class InitKind { Zero, Stationary };

struct RunConfig {
  ModelParams params;
  int N = 2001;
  double dt = 1e-3;
  double T = 1.0;
  int stride = 100;
  double theta = 0.5;
  int points = 201;      // rows in the stationary table
  double x_max = 10.0;   // extent of thermodynamic-limit tables
  NoiseSpec noise;
  std::uint64_t seed = 42;
  long samples = 1000;
  int modes = 5;
  CovarianceEstimator estimator = CovarianceEstimator::Conditional;
  std::optional<InitKind> init;  // per-command default when unset
  std::optional<SweepAxis> sweep_x;
  std::optional<SweepAxis> sweep_y;
  std::vector<PointProbe> probes;
  std::vector<PairProbe> pairs;
  std::vector<GreenSample> green;

  /// Resolved `key = value` lines, defaults included, for output headers.
  std::vector<std::string> echo() const;
};

/// Parses line-oriented `key = value` text with `#` comments. Unknown keys
/// raise ValidationError; malformed values raise ParseError.
RunConfig parse_config(std::string_view text);

/// Applies a single model-parameter assignment by name; throws
/// ValidationError for names that are not sweepable.
void set_model_parameter(ModelParams& params, std::string_view name, double value);

}  // namespace rdline
