#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "rdline/core.hpp"
#include "rdline/numeric.hpp"

namespace rdline {

/// A noise moment given either as one constant or as one value per node.
class NodeField {
 public:
  static NodeField constant(double v);
  static NodeField per_node(std::vector<double> values);

  bool is_uniform() const { return values_.empty(); }
  double uniform_value() const;  // throws InvalidArgument for per-node fields
  double at(int i) const { return values_.empty() ? constant_ : values_[i]; }
  std::size_t size() const { return values_.size(); }

 private:
  double constant_ = 0.0;
  std::vector<double> values_;
};

enum class NoiseFamily { Gamma, Gaussian };

std::string_view to_string(NoiseFamily f) noexcept;

/// Mean rate f1 and intensity f2 of the nonnegative bulk noise.
struct NoiseSpec {
  NodeField f1 = NodeField::constant(0.0);
  NodeField f2 = NodeField::constant(0.0);
  NoiseFamily family = NoiseFamily::Gamma;

  /// Throws InvalidArgument for negative or mis-sized fields and
  /// InvalidMoments for GAMMA with f1 = 0 < f2.
  void validate(const Grid& grid) const;
};

/// SplitMix64 stream keyed by (seed, member); a standard URBG.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t member);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

 private:
  std::uint64_t state_;
};

/// Per-node increment sampler with mean f1 dt and variance f2 dt / w_i,
/// where w_i is the node's control-volume width (dx inside, dx/2 at the
/// two end nodes).
class NoiseSampler {
 public:
  NoiseSampler(const NoiseSpec& spec, const Grid& grid, double dt);

  void sample(CounterRng& rng, std::vector<double>& out);
  /// Drops cached state inside the distributions so the next draw depends
  /// only on the generator.
  void reset();
  double mean(int i) const { return nodes_[i].mean; }
  double variance(int i) const { return nodes_[i].variance; }

 private:
  struct Node {
    double mean = 0.0;
    double variance = 0.0;
    std::gamma_distribution<double> gamma;
    std::normal_distribution<double> normal;
  };
  NoiseFamily family_;
  std::vector<Node> nodes_;
};

std::vector<double> sample_noise_increment(const NoiseSpec& spec, const Grid& grid, double dt, CounterRng& rng);

struct PointProbe {
  double t = 0.0;
  double x = 0.0;
};

/// Covariance of rho(t1, x1) and rho(t2, x2).
struct PairProbe {
  double t1 = 0.0;
  double t2 = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
};

enum class CovarianceEstimator {
  Direct,       // product of the two sampled densities
  Conditional,  // later density replaced by its conditional mean given the earlier state
};

struct EnsembleOptions {
  double dt = 1e-3;
  double T = 1.0;
  long n_samples = 1000;
  std::vector<PointProbe> points;
  std::vector<PairProbe> pairs;
  std::uint64_t seed = 42;
  int jobs = 1;
  CovarianceEstimator estimator = CovarianceEstimator::Conditional;
};

struct PointEstimate {
  PointProbe probe;
  double t = 0.0;  // snapped to the time grid
  double x = 0.0;  // snapped to the nearest node
  double mean = 0.0;
  double se = 0.0;
};

struct PairEstimate {
  PairProbe probe;
  double t1 = 0.0, t2 = 0.0, x1 = 0.0, x2 = 0.0;  // snapped
  double covariance = 0.0;
  double se = 0.0;
};

struct EnsembleStats {
  long n_samples = 0;
  std::vector<PointEstimate> c1;
  std::vector<PairEstimate> c2;
  std::vector<double> final_mean;  // per-node mean at t = T
  std::vector<double> final_se;
  double min_density = 0.0;        // smallest node value seen in any member
};

/// Independent noisy integrations from `init`, accumulated at the probes.
/// Throws UnstableParams unless the stationary positivity conditions hold.
EnsembleStats ensemble_run(const ModelParams& params, const NoiseSpec& spec, const DensityField& init,
                           const EnsembleOptions& options);

/// Stationary-regime mean: rho_st(x) + f1 G1(x). Needs uniform f1.
double predict_C1(const ModelParams& params, const NoiseSpec& spec, double t, double x);

/// f2 G2(|t1 - t2|; later x, earlier x) in the thermodynamic limit. Needs
/// uniform f2.
double predict_C2(const ModelParams& params, const NoiseSpec& spec, double t1, double t2, double x1, double x2);

}  // namespace rdline
