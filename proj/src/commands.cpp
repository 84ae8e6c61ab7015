#include "rdline/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <exception>
#include <functional>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "rdline/analytic.hpp"
#include "rdline/numeric.hpp"
#include "rdline/spectral.hpp"
#include "rdline/stochastic.hpp"

namespace rdline {

namespace {

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) { out_ << std::setprecision(12); }

  void comment(const std::string& line) { out_ << "# " << line << '\n'; }
  void raw(const std::string& text) { out_ << text; }

  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ","), write(cells), first = false), ...);
    out_ << '\n';
  }

 private:
  void write(const std::string& s) { out_ << s; }
  void write(std::string_view s) { out_ << s; }
  void write(const char* s) { out_ << s; }
  void write(double v) { out_ << (v == 0.0 ? 0.0 : v); }
  template <class T>
  void write(const T& v) {
    out_ << v;
  }

  std::ostream& out_;
};

void header(CsvWriter& csv, std::string_view command, const RunConfig& cfg) {
  csv.comment("rdline " + std::string(command));
  for (const std::string& line : cfg.echo()) csv.comment(line);
}

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  throw ConfigError(ErrorCode::ValidationError, 0, key, what);
}

// Runs f(i) for i in [0, n) on up to `jobs` threads; results land by index.
void parallel_for(long n, int jobs, const std::function<void(long)>& f) {
  const int workers = static_cast<int>(std::min<long>(std::max(1, jobs), n));
  if (workers <= 1) {
    for (long i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      try {
        for (long i = next++; i < n; i = next++) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    });
  }
  for (std::thread& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

void cmd_stationary(const RunConfig& cfg, CsvWriter& csv) {
  const ModelParams& p = cfg.params;
  if (p.L.is_finite()) {
    const StationaryProfile prof = stationary_finite(p);
    header(csv, "stationary", cfg);
    csv.comment("case = " + std::string(to_string(prof.case_tag())));
    csv.row("x", "rho");
    const double L = p.L.value();
    for (int i = 0; i < cfg.points; ++i) {
      const double x = L * i / (cfg.points - 1);
      csv.row(x, prof(x));
    }
    return;
  }
  const StationaryProfile prof = stationary_thermo(p);
  header(csv, "stationary", cfg);
  csv.comment("case = " + std::string(to_string(prof.case_tag())));
  const bool from_right = prof.case_tag() == StationaryCase::CaseIII;
  csv.row(from_right ? "distance_from_right" : "x", "rho");
  for (int i = 0; i < cfg.points; ++i) {
    const double x = cfg.x_max * i / (cfg.points - 1);
    csv.row(x, from_right ? prof.from_right(x) : prof(x));
  }
}

void cmd_spectrum(const RunConfig& cfg, CsvWriter& csv) {
  if (cfg.params.L.is_infinite()) config_error("L", "spectrum needs a finite L");
  const auto modes = find_modes(cfg.params, cfg.modes);
  header(csv, "spectrum", cfg);
  csv.row("index", "kind", "wavenumber", "E");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const SpectralMode& m = modes[i];
    const char* kind = m.linear ? "ZERO" : (std::real(m.q) > 0.0 ? "REAL" : "IMAGINARY");
    const double w = std::real(m.q) > 0.0 ? std::real(m.q) : std::imag(m.q);
    csv.row(i, kind, w, m.E);
  }
}

void cmd_relax(const RunConfig& cfg, const CommandOptions& opt, CsvWriter& csv) {
  const PhaseReport rep = e_max_thermo(cfg.params);
  std::string numeric_col;
  double verify_L = 0.0;
  if (opt.verify) {
    ModelParams p = cfg.params;
    if (p.L.is_infinite()) p.L = Length::finite(50.0);
    verify_L = p.L.value();
    const TridiagonalOperator op = assemble_operator(p, Grid::make(cfg.N, verify_L));
    std::ostringstream s;
    s << std::setprecision(12) << leading_eigenpairs(op, 1).front().E;
    numeric_col = s.str();
  }
  header(csv, "relax", cfg);
  if (opt.verify) {
    std::ostringstream s;
    s << std::setprecision(12) << "verify_L = " << verify_L;
    csv.comment(s.str());
  }
  const std::string tau = rep.tau ? [&] {
    std::ostringstream s;
    s << std::setprecision(12) << *rep.tau;
    return s.str();
  }() : std::string(to_string(rep.tau_kind));
  const std::string side = rep.controlling_boundary ? std::string(to_string(*rep.controlling_boundary)) : "NONE";
  if (opt.verify) {
    csv.row("E_m", "tau", "tau_kind", "phase", "controlling_boundary", "tie", "E_numeric");
    csv.row(rep.E_m, tau, to_string(rep.tau_kind), to_string(rep.phase), side, rep.tie ? 1 : 0, numeric_col);
  } else {
    csv.row("E_m", "tau", "tau_kind", "phase", "controlling_boundary", "tie");
    csv.row(rep.E_m, tau, to_string(rep.tau_kind), to_string(rep.phase), side, rep.tie ? 1 : 0);
  }
}

void cmd_phase_sweep(const RunConfig& cfg, const CommandOptions& opt, CsvWriter& csv) {
  if (!cfg.sweep_x) config_error("sweep_x", "phase-sweep needs sweep_x");
  const std::vector<double> xs = cfg.sweep_x->values();
  const std::vector<double> ys = cfg.sweep_y ? cfg.sweep_y->values() : std::vector<double>{0.0};
  const long n = static_cast<long>(xs.size() * ys.size());
  std::vector<PhaseReport> reports(n);
  parallel_for(n, opt.jobs, [&](long k) {
    ModelParams p = cfg.params;
    set_model_parameter(p, cfg.sweep_x->name, xs[k % xs.size()]);
    if (cfg.sweep_y) set_model_parameter(p, cfg.sweep_y->name, ys[k / xs.size()]);
    reports[k] = e_max_thermo(p);
  });
  header(csv, "phase-sweep", cfg);
  if (cfg.sweep_y) csv.row(cfg.sweep_x->name, cfg.sweep_y->name, "E_m", "phase", "tie");
  else csv.row(cfg.sweep_x->name, "E_m", "phase", "tie");
  for (long k = 0; k < n; ++k) {
    const PhaseReport& r = reports[k];
    const double x = xs[k % xs.size()];
    if (cfg.sweep_y) csv.row(x, ys[k / xs.size()], r.E_m, to_string(r.phase), r.tie ? 1 : 0);
    else csv.row(x, r.E_m, to_string(r.phase), r.tie ? 1 : 0);
  }
}

void cmd_green(const RunConfig& cfg, CsvWriter& csv) {
  if (cfg.green.empty()) config_error("green", "green needs at least one `green = t x x_p` line");
  const ModelParams p = cfg.params.thermodynamic();
  header(csv, "green", cfg);
  csv.row("t", "x", "x_p", "value", "prefactor", "free", "image", "boundary", "status");
  for (const GreenSample& s : cfg.green) {
    if (s.t == 0.0) {
      csv.row(s.t, s.x, s.x_p, "NA", "NA", "NA", "NA", "NA", "UNDEFINED_AT_T0");
      continue;
    }
    const GreenEval g = green_thermo(p, s.t, s.x, s.x_p);
    csv.row(g.t, g.x, g.x_p, g.value, g.prefactor, g.free, g.image, g.boundary, "OK");
  }
}

Grid finite_grid(const RunConfig& cfg) {
  if (cfg.params.L.is_infinite()) config_error("L", "time integration needs a finite L");
  return Grid::make(cfg.N, cfg.params.L.value());
}

void cmd_simulate(const RunConfig& cfg, CsvWriter& csv) {
  const Grid grid = finite_grid(cfg);
  DensityField init{grid, std::vector<double>(grid.N, 0.0), 0.0};
  if (cfg.init.value_or(InitKind::Zero) == InitKind::Stationary) {
    init.values = discrete_stationary(assemble_operator(cfg.params, grid));
  }
  IntegrateOptions opt;
  opt.dt = cfg.dt;
  opt.T = cfg.T;
  opt.stride = cfg.stride;
  opt.theta = cfg.theta;
  opt.store_frames = false;
  std::ostringstream body;
  CsvWriter rows(body);
  opt.observer = [&](const DensityField& f) {
    for (int i = 0; i < grid.N; ++i) rows.row(f.t, grid.x(i), f.values[i]);
  };
  integrate(cfg.params, init, opt);
  header(csv, "simulate", cfg);
  csv.row("t", "x", "rho");
  csv.raw(body.str());
}

void cmd_ensemble(const RunConfig& cfg, const CommandOptions& opt, CsvWriter& csv) {
  const Grid grid = finite_grid(cfg);
  if (cfg.probes.empty() && cfg.pairs.empty()) config_error("probe", "ensemble needs at least one probe or pair");
  const TridiagonalOperator op = assemble_operator(cfg.params, grid);
  DensityField init{grid, std::vector<double>(grid.N, 0.0), 0.0};
  if (cfg.init.value_or(InitKind::Stationary) == InitKind::Stationary) {
    std::vector<double> mean_source(grid.N);
    for (int i = 0; i < grid.N; ++i) mean_source[i] = cfg.noise.f1.at(i);
    init.values = discrete_stationary(op, mean_source);
  }
  EnsembleOptions eo;
  eo.dt = cfg.dt;
  eo.T = cfg.T;
  eo.n_samples = cfg.samples;
  eo.points = cfg.probes;
  eo.pairs = cfg.pairs;
  eo.seed = cfg.seed;
  eo.jobs = opt.jobs;
  eo.estimator = cfg.estimator;
  const EnsembleStats stats = ensemble_run(cfg.params, cfg.noise, init, eo);

  auto prediction = [](const std::function<double()>& f) -> std::string {
    try {
      std::ostringstream s;
      s << std::setprecision(12) << f();
      return s.str();
    } catch (const Error&) {
      return "NA";
    }
  };
  header(csv, "ensemble", cfg);
  {
    std::ostringstream s;
    s << std::setprecision(12) << "min_density = " << stats.min_density;
    csv.comment(s.str());
  }
  csv.row("kind", "t1", "t2", "x1", "x2", "estimate", "se", "prediction", "n");
  for (const PointEstimate& e : stats.c1) {
    const std::string pred = prediction([&] { return predict_C1(cfg.params, cfg.noise, e.t, e.x); });
    csv.row("C1", e.t, "", e.x, "", e.mean, e.se, pred, stats.n_samples);
  }
  for (const PairEstimate& e : stats.c2) {
    const std::string pred = prediction([&] { return predict_C2(cfg.params, cfg.noise, e.t1, e.t2, e.x1, e.x2); });
    csv.row("C2", e.t1, e.t2, e.x1, e.x2, e.covariance, e.se, pred, stats.n_samples);
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"stationary", "spectrum", "relax",   "phase-sweep",
                                                 "green",      "simulate", "ensemble"};
  return names;
}

void run_command(std::string_view name, const RunConfig& config, const CommandOptions& options, std::ostream& out) {
  // Render into a buffer so a failure never leaves a partial table behind.
  std::ostringstream buffer;
  CsvWriter csv(buffer);
  if (name == "stationary") cmd_stationary(config, csv);
  else if (name == "spectrum") cmd_spectrum(config, csv);
  else if (name == "relax") cmd_relax(config, options, csv);
  else if (name == "phase-sweep") cmd_phase_sweep(config, options, csv);
  else if (name == "green") cmd_green(config, csv);
  else if (name == "simulate") cmd_simulate(config, csv);
  else if (name == "ensemble") cmd_ensemble(config, options, csv);
  else fail(ErrorCode::InvalidArgument, "unknown command \"" + std::string(name) + "\"");
  out << buffer.str();
}

}  // namespace rdline
