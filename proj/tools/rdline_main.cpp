#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "rdline/commands.hpp"
#include "rdline/config.hpp"
#include "rdline/error.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reaction-diffusion line model: stationary profiles, spectra, Green's functions and noise ensembles"};
  std::string command;
  std::string config_path;
  std::string out_path;
  int jobs = 1;
  std::int64_t seed = -1;
  bool verify = false;

  std::string names;
  for (const auto& n : rdline::command_names()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("command", command, "One of: " + names)->required()->check(CLI::IsMember(rdline::command_names()));
  app.add_option("--config", config_path, "Config file (key = value lines)")->required();
  app.add_option("--out", out_path, "Output CSV path (stdout when omitted)");
  app.add_option("--jobs", jobs, "Worker threads for sweeps and ensembles")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Overrides the config seed")->check(CLI::NonNegativeNumber);
  app.add_flag("--verify", verify, "Add numerical cross-checks where available");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  rdline::RunConfig cfg;
  try {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "ValidationError: cannot read config file \"" << config_path << "\"\n";
      return kExitConfig;
    }
    std::ostringstream text;
    text << in.rdbuf();
    cfg = rdline::parse_config(text.str());
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  } catch (const rdline::Error& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  }

  std::ostringstream buffer;
  try {
    rdline::run_command(command, cfg, {jobs, verify}, buffer);
  } catch (const rdline::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const rdline::Error& e) {
    std::cerr << e.what() << '\n';
    return kExitNumerical;
  }

  if (out_path.empty()) {
    std::cout << buffer.str();
    return std::cout ? 0 : kExitNumerical;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out || !(out << buffer.str())) {
    std::cerr << "cannot write \"" << out_path << "\"\n";
    return kExitUsage;
  }
  return 0;
}
