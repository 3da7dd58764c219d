#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "stein4dvar/experiment.hpp"
#include "stein4dvar/io.hpp"

using namespace stein4dvar;
namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
Result run_cli(const std::string& args) {
  const std::string cmd = std::string(STEIN4DVAR_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string data(const std::string& name) { return std::string(STEIN4DVAR_TEST_DATA) + "/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("stein4dvar_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    const auto c = line.find(": ");
    if (c != std::string::npos) kv[line.substr(0, c)] = line.substr(c + 2);
  }
  return kv;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, UnknownFlagPrintsUsage) {
  const Result r = run_cli("run --config " + data("tiny_heat.cfg") + " --bogus");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("Usage"), std::string::npos) << r.out;
}

TEST(Cli, MissingSubcommandFails) {
  const Result r = run_cli("");
  EXPECT_NE(r.status, 0);
}

TEST(Cli, ConfigErrorNamesTheLine) {
  const fs::path dir = scratch("badcfg");
  std::ofstream(dir / "bad.cfg") << "[problem]\ns = 10\nwat = 3\n";
  const Result r = run_cli("run --config " + (dir / "bad.cfg").string());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("bad.cfg:3:"), std::string::npos) << r.out;
}

TEST(Cli, SpectrumCaseByAlias) {
  const Result r = run_cli("spectrum --case cor_diag --seeds 2");
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("PASS diag_exact_schur seed=1"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, RunWritesReproducibleCsv) {
  const fs::path dir = scratch("run");
  const Result a = run_cli("run --config " + data("tiny_heat.cfg") + " --threads 1 --out " + (dir / "a.csv").string());
  const Result b = run_cli("run --config " + data("tiny_heat.cfg") + " --threads 2 --out " + (dir / "b.csv").string());
  ASSERT_EQ(a.status, 0) << a.out;
  ASSERT_EQ(b.status, 0) << b.out;
  const std::string csv = slurp(dir / "a.csv");
  EXPECT_EQ(csv, slurp(dir / "b.csv"));
  EXPECT_EQ(csv.rfind(experiment_csv_header() + "\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Cli, GenerateThenSolveMatchesLibrary) {
  const fs::path dir = scratch("gen");
  const Result g = run_cli("generate --config " + data("tiny_heat.cfg") + " --seed 9 --out " + (dir / "sys").string());
  ASSERT_EQ(g.status, 0) << g.out;
  const Result s = run_cli("solve --system " + (dir / "sys").string() +
                           " --precond P_T --r 2 --tol 1e-10 --out-dir " + (dir / "sol").string());
  ASSERT_EQ(s.status, 0) << s.out;
  const auto kv = key_values(s.out);

  const SystemData sys = load_system(dir / "sys");
  SolverSettings st;
  st.formulation = Formulation::saddle;
  st.precond.kind = PrecondKind::P_T;
  st.precond.r = 2;
  st.outer.tol = 1e-10;
  const SolveOutcome lib = solve_system(sys, st);
  EXPECT_EQ(kv.at("formulation"), "saddle");
  EXPECT_EQ(kv.at("iterations"), std::to_string(lib.report.iterations));
  EXPECT_EQ(kv.at("converged"), "true");
  EXPECT_DOUBLE_EQ(std::stod(kv.at("final_residual")), lib.report.residual_history.back());
  const Matrix x = read_block(dir / "sol" / "x.mtx", sys.state_dim());
  EXPECT_LT((x - lib.x.mat()).norm() / lib.x.mat().norm(), 1e-14);
  EXPECT_TRUE(fs::exists(dir / "sol" / "lambda.mtx"));
}

TEST(Cli, SolveExitCodeReflectsConvergence) {
  const fs::path dir = scratch("noconv");
  ASSERT_EQ(run_cli("generate --config " + data("tiny_heat.cfg") + " --out " + (dir / "sys").string()).status, 0);
  const Result s = run_cli("solve --system " + (dir / "sys").string() + " --precond none --formulation saddle --max-iter 2");
  EXPECT_EQ(s.status, 1) << s.out;
  EXPECT_EQ(key_values(s.out).at("converged"), "false");
}

TEST(Cli, BoundTable) {
  const Result r = run_cli("bound --problem " + data("tiny_l96.cfg"));
  ASSERT_EQ(r.status, 0) << r.out;
  std::istringstream in(r.out);
  std::string header, norm;
  std::getline(in, header);
  std::getline(in, norm);
  EXPECT_EQ(header, "dt,quantity,sym_index:1,karcher");
  EXPECT_EQ(norm.rfind("1e-06,mhat_norm,", 0), 0u);
  const double v = std::stod(norm.substr(norm.find(',', 8) + 1));
  EXPECT_NEAR(v, 1.0, 0.1);
}
