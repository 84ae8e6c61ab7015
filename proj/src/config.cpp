#include "rdline/config.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace rdline {

ConfigError::ConfigError(ErrorCode code, int line, std::string key, const std::string& what)
    : Error(code, (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + what),
      line_(line),
      key_(std::move(key)) {}

std::vector<double> SweepAxis::values() const {
  std::vector<double> out;
  const long n = std::lround(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(lo + i * step);
  return out;
}

void set_model_parameter(ModelParams& params, std::string_view name, double value) {
  if (name == "u") params.u = value;
  else if (name == "a") params.a = value;
  else if (name == "alpha") params.alpha = value;
  else if (name == "beta") params.beta = value;
  else if (name == "alpha_p") params.alpha_p = value;
  else if (name == "beta_p") params.beta_p = value;
  else throw ConfigError(ErrorCode::ValidationError, 0, std::string(name), "parameter \"" + std::string(name) + "\" cannot be swept");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

class LineParser {
 public:
  LineParser(int line, std::string key) : line_(line), key_(std::move(key)) {}

  double number(std::string_view token) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) {
      parse_error("\"" + std::string(token) + "\" is not a finite number");
    }
    return v;
  }

  long integer(std::string_view token) const {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      parse_error("\"" + std::string(token) + "\" is not an integer");
    }
    return v;
  }

  std::vector<double> numbers(std::string_view value, std::size_t count) const {
    const auto tokens = split_ws(value);
    if (tokens.size() != count) parse_error("expected " + std::to_string(count) + " numbers");
    std::vector<double> out;
    for (auto t : tokens) out.push_back(number(t));
    return out;
  }

  [[noreturn]] void parse_error(const std::string& what) const {
    throw ConfigError(ErrorCode::ParseError, line_, key_, "key \"" + key_ + "\": " + what);
  }
  [[noreturn]] void invalid(const std::string& what) const {
    throw ConfigError(ErrorCode::ValidationError, line_, key_, "key \"" + key_ + "\": " + what);
  }

 private:
  int line_;
  std::string key_;
};

const std::set<std::string, std::less<>> kRepeatable = {"probe", "pair", "green"};

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::set<std::string, std::less<>> seen;
  double f1 = 0.0, f2 = 0.0;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(ErrorCode::ParseError, line_no, "", "expected `key = value`, got \"" + std::string(line) + "\"");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const LineParser p(line_no, key);
    if (key.empty()) p.parse_error("missing key");
    if (value.empty()) p.parse_error("missing value");
    if (!kRepeatable.count(key) && !seen.insert(key).second) p.invalid("given more than once");

    if (key == "u") cfg.params.u = p.number(value);
    else if (key == "a") cfg.params.a = p.number(value);
    else if (key == "alpha") cfg.params.alpha = p.number(value);
    else if (key == "beta") cfg.params.beta = p.number(value);
    else if (key == "alpha_p") cfg.params.alpha_p = p.number(value);
    else if (key == "beta_p") cfg.params.beta_p = p.number(value);
    else if (key == "L") {
      if (value == "inf" || value == "INF" || value == "infinite") {
        cfg.params.L = Length::infinite();
      } else {
        const double L = p.number(value);
        if (!(L > 0.0)) p.invalid("must be positive or inf");
        cfg.params.L = Length::finite(L);
      }
    } else if (key == "N") {
      const long n = p.integer(value);
      if (n < 3) p.invalid("needs at least 3 nodes");
      cfg.N = static_cast<int>(n);
    } else if (key == "dt") {
      cfg.dt = p.number(value);
      if (!(cfg.dt > 0.0)) p.invalid("must be positive");
    } else if (key == "T") {
      cfg.T = p.number(value);
      if (cfg.T < 0.0) p.invalid("must be nonnegative");
    } else if (key == "stride") {
      const long s = p.integer(value);
      if (s < 1) p.invalid("must be at least 1");
      cfg.stride = static_cast<int>(s);
    } else if (key == "theta") {
      cfg.theta = p.number(value);
      if (cfg.theta < 0.0 || cfg.theta > 1.0) p.invalid("must lie in [0, 1]");
    } else if (key == "points") {
      const long n = p.integer(value);
      if (n < 2) p.invalid("must be at least 2");
      cfg.points = static_cast<int>(n);
    } else if (key == "x_max") {
      cfg.x_max = p.number(value);
      if (!(cfg.x_max > 0.0)) p.invalid("must be positive");
    } else if (key == "f1") {
      f1 = p.number(value);
      if (f1 < 0.0) p.invalid("must be nonnegative");
    } else if (key == "f2") {
      f2 = p.number(value);
      if (f2 < 0.0) p.invalid("must be nonnegative");
    } else if (key == "family") {
      if (value == "GAMMA") cfg.noise.family = NoiseFamily::Gamma;
      else if (value == "GAUSSIAN") cfg.noise.family = NoiseFamily::Gaussian;
      else p.invalid("must be GAMMA or GAUSSIAN");
    } else if (key == "estimator") {
      if (value == "CONDITIONAL") cfg.estimator = CovarianceEstimator::Conditional;
      else if (value == "DIRECT") cfg.estimator = CovarianceEstimator::Direct;
      else p.invalid("must be CONDITIONAL or DIRECT");
    } else if (key == "init") {
      if (value == "STATIONARY") cfg.init = InitKind::Stationary;
      else if (value == "ZERO") cfg.init = InitKind::Zero;
      else p.invalid("must be STATIONARY or ZERO");
    } else if (key == "seed") {
      const long s = p.integer(value);
      if (s < 0) p.invalid("must be nonnegative");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "samples") {
      cfg.samples = p.integer(value);
      if (cfg.samples < 2) p.invalid("must be at least 2");
    } else if (key == "modes") {
      const long m = p.integer(value);
      if (m < 1) p.invalid("must be at least 1");
      cfg.modes = static_cast<int>(m);
    } else if (key == "sweep_x" || key == "sweep_y") {
      const auto tokens = split_ws(value);
      if (tokens.size() != 4) p.parse_error("expected `name lo hi step`");
      SweepAxis axis{std::string(tokens[0]), p.number(tokens[1]), p.number(tokens[2]), p.number(tokens[3])};
      ModelParams probe;
      try {
        set_model_parameter(probe, axis.name, 0.0);
      } catch (const ConfigError&) {
        p.invalid("unknown sweep parameter \"" + axis.name + "\"");
      }
      if (!(axis.step > 0.0)) p.invalid("sweep step must be positive");
      if (axis.hi < axis.lo) p.invalid("sweep range is empty");
      (key == "sweep_x" ? cfg.sweep_x : cfg.sweep_y) = axis;
    } else if (key == "probe") {
      const auto v = p.numbers(value, 2);
      cfg.probes.push_back({v[0], v[1]});
    } else if (key == "pair") {
      const auto v = p.numbers(value, 4);
      cfg.pairs.push_back({v[0], v[1], v[2], v[3]});
    } else if (key == "green") {
      const auto v = p.numbers(value, 3);
      cfg.green.push_back({v[0], v[1], v[2]});
    } else {
      throw ConfigError(ErrorCode::ValidationError, line_no, key, "unknown key \"" + key + "\"");
    }
    if (end == text.size()) break;
  }

  cfg.noise.f1 = NodeField::constant(f1);
  cfg.noise.f2 = NodeField::constant(f2);
  try {
    cfg.params.validate();
  } catch (const Error& e) {
    throw ConfigError(ErrorCode::ValidationError, 0, "", e.what());
  }
  if (cfg.noise.family == NoiseFamily::Gamma && f1 == 0.0 && f2 > 0.0) {
    throw ConfigError(ErrorCode::ValidationError, 0, "f1", "GAMMA noise needs f1 > 0 when f2 > 0");
  }
  return cfg;
}

std::vector<std::string> RunConfig::echo() const {
  std::vector<std::string> out;
  auto add = [&](const std::string& key, const auto& value) {
    std::ostringstream s;
    s << std::setprecision(12) << key << " = " << value;
    out.push_back(s.str());
  };
  add("u", params.u);
  add("a", params.a);
  add("L", params.L.is_infinite() ? std::string("inf") : [&] {
    std::ostringstream s;
    s << std::setprecision(12) << params.L.value();
    return s.str();
  }());
  add("alpha", params.alpha);
  add("beta", params.beta);
  add("alpha_p", params.alpha_p);
  add("beta_p", params.beta_p);
  add("N", N);
  add("dt", dt);
  add("T", T);
  add("stride", stride);
  add("theta", theta);
  add("points", points);
  add("x_max", x_max);
  add("f1", noise.f1.uniform_value());
  add("f2", noise.f2.uniform_value());
  add("family", to_string(noise.family));
  add("estimator", std::string(estimator == CovarianceEstimator::Conditional ? "CONDITIONAL" : "DIRECT"));
  if (init) add("init", std::string(*init == InitKind::Stationary ? "STATIONARY" : "ZERO"));
  add("seed", seed);
  add("samples", samples);
  add("modes", modes);
  auto axis = [](const SweepAxis& a) {
    std::ostringstream s;
    s << std::setprecision(12) << a.name << ' ' << a.lo << ' ' << a.hi << ' ' << a.step;
    return s.str();
  };
  if (sweep_x) add("sweep_x", axis(*sweep_x));
  if (sweep_y) add("sweep_y", axis(*sweep_y));
  for (const auto& pr : probes) {
    std::ostringstream s;
    s << std::setprecision(12) << pr.t << ' ' << pr.x;
    add("probe", s.str());
  }
  for (const auto& pr : pairs) {
    std::ostringstream s;
    s << std::setprecision(12) << pr.t1 << ' ' << pr.t2 << ' ' << pr.x1 << ' ' << pr.x2;
    add("pair", s.str());
  }
  for (const auto& g : green) {
    std::ostringstream s;
    s << std::setprecision(12) << g.t << ' ' << g.x << ' ' << g.x_p;
    add("green", s.str());
  }
  return out;
}

}  // namespace rdline
