#include "rdline/stochastic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "rdline/analytic.hpp"
#include "rdline/error.hpp"

namespace rdline {

NodeField NodeField::constant(double v) {
  NodeField f;
  f.constant_ = v;
  return f;
}

NodeField NodeField::per_node(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::InvalidArgument, "per-node field needs at least one value");
  NodeField f;
  f.values_ = std::move(values);
  return f;
}

double NodeField::uniform_value() const {
  if (!is_uniform()) fail(ErrorCode::InvalidArgument, "field varies per node; a uniform value is required");
  return constant_;
}

std::string_view to_string(NoiseFamily f) noexcept { return f == NoiseFamily::Gamma ? "GAMMA" : "GAUSSIAN"; }

void NoiseSpec::validate(const Grid& grid) const {
  for (const NodeField* field : {&f1, &f2}) {
    if (!field->is_uniform() && static_cast<int>(field->size()) != grid.N) {
      fail(ErrorCode::InvalidArgument, "per-node noise field length differs from the grid");
    }
  }
  for (int i = 0; i < grid.N; ++i) {
    const double m = f1.at(i), v = f2.at(i);
    if (!(m >= 0.0) || !(v >= 0.0) || !std::isfinite(m) || !std::isfinite(v)) {
      fail(ErrorCode::InvalidArgument, "noise moments f1, f2 must be finite and nonnegative");
    }
    if (family == NoiseFamily::Gamma && m == 0.0 && v > 0.0) {
      std::ostringstream msg;
      msg << "GAMMA noise with f1 = 0 and f2 = " << v << " at node " << i << " has no nonnegative law";
      fail(ErrorCode::InvalidMoments, msg.str());
    }
  }
}

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t member)
    : state_(splitmix(seed + 0x9e3779b97f4a7c15ULL) ^ splitmix(member * 0xd1b54a32d192ed03ULL + 1)) {}

CounterRng::result_type CounterRng::operator()() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return splitmix(state_);
}

NoiseSampler::NoiseSampler(const NoiseSpec& spec, const Grid& grid, double dt) : family_(spec.family) {
  if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "dt must be positive");
  spec.validate(grid);
  nodes_.resize(grid.N);
  for (int i = 0; i < grid.N; ++i) {
    const double width = (i == 0 || i == grid.N - 1) ? 0.5 * grid.dx : grid.dx;
    Node& node = nodes_[i];
    node.mean = spec.f1.at(i) * dt;
    node.variance = spec.f2.at(i) * dt / width;
    if (node.variance > 0.0) {
      if (family_ == NoiseFamily::Gamma) {
        node.gamma = std::gamma_distribution<double>(node.mean * node.mean / node.variance, node.variance / node.mean);
      } else {
        node.normal = std::normal_distribution<double>(node.mean, std::sqrt(node.variance));
      }
    }
  }
}

void NoiseSampler::reset() {
  for (Node& node : nodes_) {
    node.gamma.reset();
    node.normal.reset();
  }
}

void NoiseSampler::sample(CounterRng& rng, std::vector<double>& out) {
  out.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& node = nodes_[i];
    if (node.variance == 0.0) {
      out[i] = node.mean;
    } else {
      out[i] = family_ == NoiseFamily::Gamma ? node.gamma(rng) : node.normal(rng);
    }
  }
}

std::vector<double> sample_noise_increment(const NoiseSpec& spec, const Grid& grid, double dt, CounterRng& rng) {
  NoiseSampler sampler(spec, grid, dt);
  std::vector<double> out;
  sampler.sample(rng, out);
  return out;
}

namespace {

// Shifted power sums up to second order in each variable. Sums merge by
// addition, so a fixed merge order gives bitwise-reproducible results.
struct PairSums {
  double n = 0, x = 0, y = 0, xx = 0, yy = 0, xy = 0, xxy = 0, xyy = 0, xxyy = 0;

  void add(double a, double b) {
    n += 1;
    x += a;
    y += b;
    xx += a * a;
    yy += b * b;
    xy += a * b;
    xxy += a * a * b;
    xyy += a * b * b;
    xxyy += a * a * b * b;
  }
  void merge(const PairSums& o) {
    n += o.n;
    x += o.x;
    y += o.y;
    xx += o.xx;
    yy += o.yy;
    xy += o.xy;
    xxy += o.xxy;
    xyy += o.xyy;
    xxyy += o.xxyy;
  }
  // Covariance with 1/n normalization and its standard error.
  std::pair<double, double> covariance() const {
    const double mx = x / n, my = y / n;
    const double cov = xy / n - mx * my;
    const double m22 = xxyy / n - 2.0 * my * xxy / n - 2.0 * mx * xyy / n + my * my * xx / n + mx * mx * yy / n +
                       4.0 * mx * my * xy / n - 3.0 * mx * mx * my * my;
    const double var = std::max(0.0, m22 - cov * cov);
    return {cov, std::sqrt(var / n)};
  }
};

struct MeanSums {
  double n = 0, x = 0, xx = 0;
  void add(double a) {
    n += 1;
    x += a;
    xx += a * a;
  }
  void merge(const MeanSums& o) {
    n += o.n;
    x += o.x;
    xx += o.xx;
  }
  // Mean (without the shift) and standard error of the mean.
  std::pair<double, double> mean(double shift) const {
    const double m = x / n;
    const double var = n > 1 ? std::max(0.0, (xx - n * m * m) / (n - 1)) : 0.0;
    return {m + shift, std::sqrt(var / n)};
  }
};

struct ChunkResult {
  std::vector<MeanSums> points;
  std::vector<PairSums> pairs;
  std::vector<MeanSums> final_nodes;
  double min_density = std::numeric_limits<double>::infinity();
};

struct SnappedPair {
  long early_step = 0, late_step = 0;
  int early_node = 0, late_node = 0;
  bool first_is_early = true;  // probe (t1, x1) is the early end
  std::vector<double> adjoint;  // row of the deterministic propagator, conditional estimator only
  double shift_early = 0.0, shift_late = 0.0;
};

TridiagonalOperator transposed(const TridiagonalOperator& op) {
  TridiagonalOperator t = op;
  const int n = op.grid.N;
  for (int i = 0; i < n; ++i) {
    t.sub[i] = i > 0 ? op.sup[i - 1] : 0.0;
    t.sup[i] = i + 1 < n ? op.sub[i + 1] : 0.0;
  }
  std::fill(t.affine.begin(), t.affine.end(), 0.0);
  return t;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

EnsembleStats ensemble_run(const ModelParams& params, const NoiseSpec& spec, const DensityField& init,
                           const EnsembleOptions& options) {
  params.validate();
  const ExistenceReport report = stationary_exists(params);
  if (!report.positive_profile()) fail(ErrorCode::UnstableParams, report.diagnostic());
  const Grid& grid = init.grid;
  if (static_cast<int>(init.values.size()) != grid.N) fail(ErrorCode::InvalidArgument, "initial field length does not match the grid");
  if (options.n_samples < 2) fail(ErrorCode::InvalidArgument, "ensemble needs at least two members");
  if (options.jobs < 1) fail(ErrorCode::InvalidArgument, "jobs must be at least 1");
  spec.validate(grid);

  const TridiagonalOperator op = assemble_operator(params, grid);
  const ThetaStepper stepper(op, options.dt, 0.5);
  const long total_steps = std::lround(options.T / options.dt);
  if (!(options.T >= 0.0) || std::abs(total_steps * options.dt - options.T) > 1e-9 * std::max(1.0, options.T)) {
    fail(ErrorCode::InvalidArgument, "T must be a nonnegative integer multiple of dt");
  }

  auto snap_time = [&](double t) {
    const long s = std::lround((t - init.t) / options.dt);
    if (s < 0 || s > total_steps) {
      std::ostringstream msg;
      msg << "probe time " << t << " lies outside [" << init.t << ", " << init.t + options.T << "]";
      fail(ErrorCode::InvalidArgument, msg.str());
    }
    return s;
  };
  auto snap_node = [&](double x) {
    if (!(x >= -1e-12 && x <= grid.L + 1e-12)) {
      std::ostringstream msg;
      msg << "probe position " << x << " lies outside [0, " << grid.L << "]";
      fail(ErrorCode::InvalidArgument, msg.str());
    }
    return static_cast<int>(std::clamp<long>(std::lround(x / grid.dx), 0, grid.N - 1));
  };

  std::vector<std::pair<long, int>> points;
  for (const PointProbe& p : options.points) points.emplace_back(snap_time(p.t), snap_node(p.x));

  const bool conditional = options.estimator == CovarianceEstimator::Conditional;
  const TridiagonalOperator op_t = transposed(op);
  const ThetaStepper adjoint_stepper(op_t, options.dt, 0.5);
  std::vector<SnappedPair> pairs;
  std::map<std::pair<int, long>, std::vector<double>> adjoint_cache;
  for (const PairProbe& p : options.pairs) {
    const long s1 = snap_time(p.t1), s2 = snap_time(p.t2);
    const int n1 = snap_node(p.x1), n2 = snap_node(p.x2);
    SnappedPair sp;
    sp.first_is_early = s1 <= s2;
    sp.early_step = std::min(s1, s2);
    sp.late_step = std::max(s1, s2);
    sp.early_node = sp.first_is_early ? n1 : n2;
    sp.late_node = sp.first_is_early ? n2 : n1;
    sp.shift_early = init.values[sp.early_node];
    sp.shift_late = init.values[sp.late_node];
    if (conditional) {
      const long lag = sp.late_step - sp.early_step;
      auto [it, inserted] = adjoint_cache.try_emplace({sp.late_node, lag});
      if (inserted) {
        // Row late_node of M^lag, built as (M^T)^lag e_j.
        std::vector<double> r(grid.N, 0.0);
        r[sp.late_node] = 1.0;
        std::vector<double> tmp;
        for (long k = 0; k < lag; ++k) {
          adjoint_stepper.solve(r);
          adjoint_stepper.explicit_part(r, tmp);
          r.swap(tmp);
        }
        it->second = std::move(r);
      }
      sp.adjoint = it->second;
      sp.shift_late = dot(sp.adjoint, init.values);
    }
    pairs.push_back(std::move(sp));
  }

  constexpr long kChunk = 64;
  const long n_chunks = (options.n_samples + kChunk - 1) / kChunk;
  std::vector<ChunkResult> results(n_chunks);
  std::atomic<long> next_chunk{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto run_chunk = [&](long c, NoiseSampler& sampler) {
    ChunkResult res;
    res.points.resize(points.size());
    res.pairs.resize(pairs.size());
    res.final_nodes.resize(grid.N);
    std::vector<double> rho, rhs, noise, early_value(pairs.size());
    const long begin = c * kChunk;
    const long end = std::min(options.n_samples, begin + kChunk);
    for (long member = begin; member < end; ++member) {
      CounterRng rng(options.seed, static_cast<std::uint64_t>(member));
      sampler.reset();
      rho = init.values;
      for (long s = 0;; ++s) {
        for (std::size_t k = 0; k < points.size(); ++k) {
          if (points[k].first == s) res.points[k].add(rho[points[k].second] - init.values[points[k].second]);
        }
        for (std::size_t k = 0; k < pairs.size(); ++k) {
          const SnappedPair& p = pairs[k];
          double early = 0.0, late = 0.0;
          bool done = false;
          if (conditional && p.early_step == s) {
            early = rho[p.early_node] - p.shift_early;
            late = dot(p.adjoint, rho) - p.shift_late;
            done = true;
          } else if (!conditional) {
            if (p.early_step == s) early_value[k] = rho[p.early_node] - p.shift_early;
            if (p.late_step == s) {
              early = early_value[k];
              late = rho[p.late_node] - p.shift_late;
              done = true;
            }
          }
          if (done) {
            if (p.first_is_early) res.pairs[k].add(early, late);
            else res.pairs[k].add(late, early);
          }
        }
        if (s == total_steps) break;
        stepper.explicit_part(rho, rhs);
        sampler.sample(rng, noise);
        for (int i = 0; i < grid.N; ++i) rhs[i] += noise[i];
        stepper.solve(rhs);
        rho.swap(rhs);
        for (int i = 0; i < grid.N; ++i) {
          if (!std::isfinite(rho[i])) {
            std::ostringstream msg;
            msg << "member " << member << " became non-finite at node " << i << ", step " << s + 1;
            fail(ErrorCode::NonFiniteState, msg.str());
          }
          res.min_density = std::min(res.min_density, rho[i]);
        }
      }
      for (int i = 0; i < grid.N; ++i) res.final_nodes[i].add(rho[i] - init.values[i]);
    }
    results[c] = std::move(res);
  };

  auto worker = [&]() {
    try {
      NoiseSampler sampler(spec, grid, options.dt);
      for (long c = next_chunk++; c < n_chunks; c = next_chunk++) run_chunk(c, sampler);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      next_chunk = n_chunks;
    }
  };

  const int jobs = static_cast<int>(std::min<long>(options.jobs, n_chunks));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);

  ChunkResult total;
  total.points.resize(points.size());
  total.pairs.resize(pairs.size());
  total.final_nodes.resize(grid.N);
  for (const ChunkResult& r : results) {
    for (std::size_t k = 0; k < points.size(); ++k) total.points[k].merge(r.points[k]);
    for (std::size_t k = 0; k < pairs.size(); ++k) total.pairs[k].merge(r.pairs[k]);
    for (int i = 0; i < grid.N; ++i) total.final_nodes[i].merge(r.final_nodes[i]);
    total.min_density = std::min(total.min_density, r.min_density);
  }

  EnsembleStats stats;
  stats.n_samples = options.n_samples;
  stats.min_density = std::min(total.min_density, *std::min_element(init.values.begin(), init.values.end()));
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto [mean, se] = total.points[k].mean(init.values[points[k].second]);
    stats.c1.push_back({options.points[k], init.t + points[k].first * options.dt, grid.x(points[k].second), mean, se});
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const SnappedPair& p = pairs[k];
    const auto [cov, se] = total.pairs[k].covariance();
    PairEstimate e;
    e.probe = options.pairs[k];
    const double t_early = init.t + p.early_step * options.dt, t_late = init.t + p.late_step * options.dt;
    e.t1 = p.first_is_early ? t_early : t_late;
    e.t2 = p.first_is_early ? t_late : t_early;
    e.x1 = grid.x(p.first_is_early ? p.early_node : p.late_node);
    e.x2 = grid.x(p.first_is_early ? p.late_node : p.early_node);
    e.covariance = cov;
    e.se = se;
    stats.c2.push_back(e);
  }
  for (int i = 0; i < grid.N; ++i) {
    const auto [mean, se] = total.final_nodes[i].mean(init.values[i]);
    stats.final_mean.push_back(mean);
    stats.final_se.push_back(se);
  }
  return stats;
}

double predict_C1(const ModelParams& params, const NoiseSpec& spec, double t, double x) {
  (void)t;
  const double f1 = spec.f1.uniform_value();
  if (params.L.is_finite()) {
    const double rho = stationary_finite(params)(x);
    return f1 == 0.0 ? rho : rho + f1 * g1_finite(params)(x);
  }
  const double rho = stationary_thermo(params)(x);
  return f1 == 0.0 ? rho : rho + f1 * g1_thermo(params, x);
}

double predict_C2(const ModelParams& params, const NoiseSpec& spec, double t1, double t2, double x1, double x2) {
  const double f2 = spec.f2.uniform_value();
  const ModelParams thermo = params.thermodynamic();
  if (t1 >= t2) return f2 * g2_thermo_quadrature(thermo, t1 - t2, x1, x2);
  return f2 * g2_thermo_quadrature(thermo, t2 - t1, x2, x1);
}

}  // namespace rdline
