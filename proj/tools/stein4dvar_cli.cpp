#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include "stein4dvar/diagnostics.hpp"
#include "stein4dvar/experiment.hpp"
#include "stein4dvar/io.hpp"

using namespace stein4dvar;

namespace {

// Writes to `path`, or stdout when empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw std::runtime_error("cannot open " + path + " for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct RunArgs {
  std::string config, scale, out;
  int threads = 0;
  int realizations = 0;
  bool no_timing = false;
};

int cmd_run(const RunArgs& a) {
  ExperimentConfig cfg = ExperimentConfig::load(a.config, a.scale);
  if (a.realizations > 0) cfg.realizations = a.realizations;
  if (a.no_timing) cfg.timing = false;
  const auto rows = run_experiment(cfg, a.threads);
  Output out(a.out.empty() ? cfg.output : a.out);
  write_experiment_csv(out.stream(), rows, cfg.timing);
  return 0;
}

struct SolveArgs {
  std::string system, precond = "Shat", formulation = "auto", mhat = "sym_first", out_dir;
  Index r = 0, k = 0;
  double tol = 1e-8, inner_tol = 1e-8;
  int max_iter = 1000;
  bool no_parity = false, history = false;
};

int cmd_solve(const SolveArgs& a) {
  const SystemData sys = load_system(a.system);
  SolverSettings st;
  st.precond.kind = parse_precond_kind(a.precond);
  st.precond.r = a.r;
  st.precond.mhat = MhatStrategy::parse(a.mhat);
  st.precond.inner_tol = a.inner_tol;
  if (a.formulation == "auto")
    st.formulation = st.precond.kind == PrecondKind::Shat ? Formulation::spd : Formulation::saddle;
  else
    st.formulation = parse_formulation(a.formulation);
  st.k = a.k;
  st.parity = !a.no_parity;
  st.outer.tol = a.tol;
  st.outer.max_iter = a.max_iter;
  const SolveOutcome out = solve_system(sys, st);
  const SolveReport& rep = out.report;
  std::printf("formulation: %s\n", formulation_name(st.formulation).c_str());
  std::printf("preconditioner: %s\n", precond_name(st.precond.kind).c_str());
  std::printf("iterations: %d\n", rep.iterations);
  std::printf("converged: %s\n", rep.converged ? "true" : "false");
  std::printf("final_residual: %.17g\n", rep.residual_history.back());
  std::printf("precond_applications: %ld\n", rep.precond_applications);
  std::printf("schur_applications: %ld\n", out.counters.schur_applications);
  std::printf("inner_iterations: %ld\n", out.counters.inner_iterations);
  std::printf("wall_time: %.6f\n", out.total_time);
  if (!rep.message.empty()) std::printf("message: %s\n", rep.message.c_str());
  if (a.history)
    for (std::size_t i = 0; i < rep.residual_history.size(); ++i)
      std::printf("residual[%zu]: %.17g\n", i, rep.residual_history[i]);
  if (!a.out_dir.empty()) {
    std::filesystem::create_directories(a.out_dir);
    write_block(std::filesystem::path(a.out_dir) / "x.mtx", out.x.mat());
    if (st.formulation == Formulation::saddle) {
      write_block(std::filesystem::path(a.out_dir) / "theta.mtx", out.saddle.theta.mat());
      write_block(std::filesystem::path(a.out_dir) / "lambda.mtx", out.saddle.lambda.mat());
    }
  }
  return rep.converged ? 0 : 1;
}

struct SpectrumArgs {
  std::string which, csv;
  int seeds = 1;
  std::uint64_t seed0 = 1;
};

int cmd_spectrum(const SpectrumArgs& a) {
  std::vector<SpectrumCase> cases;
  if (a.which == "all") cases = all_spectrum_cases();
  else cases.push_back(parse_spectrum_case(a.which));
  std::vector<SpectrumReport> reports;
  bool ok = true;
  for (SpectrumCase c : cases)
    for (int i = 0; i < a.seeds; ++i) {
      reports.push_back(verify_spectrum(c, a.seed0 + static_cast<std::uint64_t>(i)));
      const SpectrumReport& r = reports.back();
      ok = ok && r.pass;
      std::printf("%s %s seed=%llu max_error=%.3e %s\n", r.pass ? "PASS" : "FAIL", r.case_name.c_str(),
                  static_cast<unsigned long long>(r.seed), r.max_error, r.detail.c_str());
    }
  if (!a.csv.empty()) {
    Output out(a.csv);
    write_spectrum_csv(out.stream(), reports);
  }
  return ok ? 0 : 1;
}

struct BoundArgs {
  std::string problem, scale, out;
};

int cmd_bound(const BoundArgs& a) {
  const ExperimentConfig cfg = ExperimentConfig::load(a.problem, a.scale);
  const auto rows = run_bound_table(cfg.problem, cfg.bound);
  for (const BoundRow& r : rows)
    if (!r.error.empty()) std::fprintf(stderr, "dt=%g %s: %s\n", r.dt, r.strategy.c_str(), r.error.c_str());
  Output out(a.out.empty() ? cfg.output : a.out);
  write_bound_csv(out.stream(), rows);
  return 0;
}

struct GenerateArgs {
  std::string config, scale, out;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a) {
  const ExperimentConfig cfg = ExperimentConfig::load(a.config, a.scale);
  ProblemSpec ps = cfg.problem;
  if (!cfg.N_values.empty()) ps.N = cfg.N_values.front();
  if (!cfg.dt_values.empty()) ps.dt = cfg.dt_values.front();
  save_system(a.out, make_realization(ps, a.seed));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stein-equation preconditioners for weak-constraint 4D-Var"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment grid and write CSV");
  run_cmd->add_option("--config", run.config, "Experiment config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--scale", run.scale, "Apply the [scale.<name>] overrides");
  run_cmd->add_option("--out", run.out, "CSV output path (default: config output, else stdout)");
  run_cmd->add_option("--threads", run.threads, "Worker threads (default: STEIN4DVAR_THREADS or all cores)");
  run_cmd->add_option("--realizations", run.realizations, "Override the realization count");
  run_cmd->add_flag("--no-timing", run.no_timing, "Write NA for wall times");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a system stored as Matrix Market files");
  solve_cmd->add_option("--system", solve.system, "System directory")->required()->check(CLI::ExistingDirectory);
  solve_cmd->add_option("--precond", solve.precond, "none, Shat, P_D, P_T or P_C");
  solve_cmd->add_option("--r", solve.r, "Rank of the observation update");
  solve_cmd->add_option("--formulation", solve.formulation, "auto, spd or saddle");
  solve_cmd->add_option("--mhat", solve.mhat, "Mhat strategy");
  solve_cmd->add_option("--k", solve.k, "k-block Lhat with vectorized Krylov (0 = Stein Lhat)");
  solve_cmd->add_option("--tol", solve.tol, "Outer relative residual tolerance");
  solve_cmd->add_option("--inner-tol", solve.inner_tol, "Inner CG tolerance");
  solve_cmd->add_option("--max-iter", solve.max_iter, "Outer iteration cap");
  solve_cmd->add_flag("--no-parity", solve.no_parity, "Disable the alternating P_D basis");
  solve_cmd->add_flag("--history", solve.history, "Print the residual history");
  solve_cmd->add_option("--out-dir", solve.out_dir, "Write the solution blocks here");

  SpectrumArgs spec;
  auto* spec_cmd = app.add_subcommand("spectrum", "Dense spectral verification; exit 1 on failure");
  spec_cmd->add_option("--case", spec.which, "Case name or 'all'")->required();
  spec_cmd->add_option("--seeds", spec.seeds, "Number of seeded instances")->check(CLI::PositiveNumber);
  spec_cmd->add_option("--seed0", spec.seed0, "First seed");
  spec_cmd->add_option("--csv", spec.csv, "Write the CSV report here");

  BoundArgs bound;
  auto* bound_cmd = app.add_subcommand("bound", "Stein approximation bound per Mhat strategy");
  bound_cmd->add_option("--problem", bound.problem, "Config file with [problem] and [bound]")
      ->required()
      ->check(CLI::ExistingFile);
  bound_cmd->add_option("--scale", bound.scale, "Apply the [scale.<name>] overrides");
  bound_cmd->add_option("--out", bound.out, "CSV output path (default: stdout)");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Write one problem realization as Matrix Market files");
  gen_cmd->add_option("--config", gen.config, "Config file with [problem]")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--scale", gen.scale, "Apply the [scale.<name>] overrides");
  gen_cmd->add_option("--seed", gen.seed, "Realization seed");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*solve_cmd) return cmd_solve(solve);
    if (*spec_cmd) return cmd_spectrum(spec);
    if (*bound_cmd) return cmd_bound(bound);
    if (*gen_cmd) return cmd_generate(gen);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
