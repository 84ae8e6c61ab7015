#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int status;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("rdline_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  CliResult run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(RDLINE_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
  }

  fs::path dir_;
};

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

}  // namespace

TEST_F(Cli, RelaxReportsSlowLeftPhase) {
  const auto cfg = write("relax.cfg", "u = 4\nbeta = 1\nbeta_p = 1\na = 0\n");
  const CliResult r = run("relax --config " + cfg.string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "E_m,tau,tau_kind,phase,controlling_boundary,tie");
  EXPECT_EQ(lines[1].rfind("-3,0.333333333333,FINITE,SLOW_LEFT,LEFT,0", 0), 0u) << lines[1];
  EXPECT_NE(r.out.find("# u = 4"), std::string::npos);
}

TEST_F(Cli, PhaseSweepKinksAtTwo) {
  const auto cfg = write("sweep.cfg", "beta = 1\nbeta_p = 1\na = 0\nsweep_x = u -6 6 0.05\n");
  const CliResult r = run("phase-sweep --jobs 3 --config " + cfg.string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 242u);
  std::vector<double> u, e;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    double uu = 0, ee = 0;
    ASSERT_EQ(std::sscanf(lines[i].c_str(), "%lf,%lf", &uu, &ee), 2);
    u.push_back(uu);
    e.push_back(ee);
  }
  // E_m is quadratic in the fast phase and linear in the slow ones, so the
  // slope bends where the second difference switches between -h^2/2 and 0.
  const double h = 0.05;
  std::vector<double> kinks;
  bool prev_curved = false;
  for (std::size_t i = 1; i + 1 < e.size(); ++i) {
    const bool curved = e[i + 1] - 2 * e[i] + e[i - 1] < -h * h / 3;
    if (i > 1 && curved != prev_curved) kinks.push_back(0.5 * (u[i] + u[i - 1]));
    prev_curved = curved;
  }
  ASSERT_EQ(kinks.size(), 2u);
  EXPECT_NEAR(kinks[0], -2.0, 0.05);
  EXPECT_NEAR(kinks[1], 2.0, 0.05);
}

TEST_F(Cli, GreenCausalRowsAreZero) {
  const auto cfg = write("g.cfg", "u = 1\na = 1\nbeta = 2\ngreen = -1 1 1\ngreen = 0 1 1\ngreen = 0.5 1 2\n");
  const CliResult r = run("green --config " + cfg.string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[1], "-1,1,1,0,0,0,0,0,OK");
  EXPECT_NE(lines[2].find("UNDEFINED_AT_T0"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  const auto bad_value = write("a.cfg", "u = fast\n");
  CliResult r = run("relax --config " + bad_value.string());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("ParseError: line 1"), std::string::npos) << r.err;

  const auto typo = write("b.cfg", "betta = 1\n");
  r = run("relax --config " + typo.string());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("unknown key \"betta\""), std::string::npos);

  EXPECT_EQ(run("relax --config " + (dir_ / "missing.cfg").string()).status, 2);
  EXPECT_EQ(run("bogus --config " + typo.string()).status, 1);
  EXPECT_EQ(run("relax").status, 1);

  const auto outside = write("c.cfg", "u = 1\na = 1\ngreen = 1 -1 1\n");
  r = run("green --config " + outside.string());
  EXPECT_EQ(r.status, 3);
  EXPECT_EQ(r.err.rfind("InvalidArgument: ", 0), 0u) << r.err;
}

TEST_F(Cli, EnsembleByteIdenticalAcrossJobs) {
  const auto cfg = write("e.cfg",
                         "u = 0\na = 1\nbeta = 2\nL = 10\nN = 51\ndt = 0.05\nT = 2\nf1 = 1\nf2 = 0.5\n"
                         "samples = 200\nprobe = 2 0\npair = 1 2 5 5\n");
  const fs::path a = dir_ / "a.csv", b = dir_ / "b.csv";
  ASSERT_EQ(run("ensemble --jobs 1 --config " + cfg.string() + " --out " + a.string()).status, 0);
  ASSERT_EQ(run("ensemble --jobs 4 --config " + cfg.string() + " --out " + b.string()).status, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  const fs::path c = dir_ / "c.csv";
  ASSERT_EQ(run("ensemble --seed 43 --config " + cfg.string() + " --out " + c.string()).status, 0);
  EXPECT_NE(slurp(a), slurp(c));
  EXPECT_NE(slurp(c).find("# seed = 43"), std::string::npos);
}

TEST_F(Cli, StationaryAndSpectrumTables) {
  const auto cfg = write("s.cfg", "u = 4\nbeta = 1\nbeta_p = 1\na = 0\nL = 20\nalpha = 1\npoints = 11\n");
  CliResult r = run("stationary --config " + cfg.string());
  ASSERT_EQ(r.status, 0) << r.err;
  auto lines = data_lines(r.out);
  EXPECT_EQ(lines[0], "x,rho");
  EXPECT_EQ(lines.size(), 12u);
  r = run("spectrum --config " + cfg.string());
  ASSERT_EQ(r.status, 0) << r.err;
  lines = data_lines(r.out);
  EXPECT_EQ(lines[0], "index,kind,wavenumber,E");
  EXPECT_EQ(lines[1].rfind("0,REAL,", 0), 0u);
}

TEST_F(Cli, SimulateWritesFrames) {
  const auto cfg = write("m.cfg", "u = 0\na = 1\nalpha = 1\nbeta = 2\nL = 5\nN = 11\ndt = 0.1\nT = 0.2\nstride = 1\n");
  const CliResult r = run("simulate --config " + cfg.string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto lines = data_lines(r.out);
  EXPECT_EQ(lines[0], "t,x,rho");
  EXPECT_EQ(lines.size(), 1u + 3u * 11u);
}
