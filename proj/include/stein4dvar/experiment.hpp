#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stein4dvar/config.hpp"
#include "stein4dvar/core.hpp"
#include "stein4dvar/krylov.hpp"
#include "stein4dvar/precond.hpp"
#include "stein4dvar/problems.hpp"

namespace stein4dvar {

enum class Formulation { spd, saddle };
Formulation parse_formulation(const std::string& text);
std::string formulation_name(Formulation f);

struct SolverSettings {
  Formulation formulation = Formulation::spd;
  PrecondConfig precond;
  // 0: Stein Lhat with matrix-oriented Krylov. k >= 1: k-block Lhat with
  // vectorized Krylov.
  Index k = 0;
  bool parity = true;  // alternating basis for matrix-oriented P_D
  SolveConfig outer;
};

struct SolveOutcome {
  SolveReport report;
  PrecondCounters counters;
  double total_time = 0.0;  // preconditioner setup plus solve
  SaddleTriple saddle;      // saddle solution; empty for the spd formulation
  StateBlockMatrix x;       // state increment in both formulations
};

// spd accepts Shat or none, saddle accepts P_D, P_T, P_C or none.
// Variable preconditioners switch the outer method to its flexible form.
SolveOutcome solve_system(const SystemData& sys, const SolverSettings& st);

// "r = p" in configs.
struct RankSpec {
  bool full = false;
  Index value = 0;
  Index resolve(Index p) const { return full ? p : value; }
};

// "k = N+1" in configs.
struct KSpec {
  bool n_plus_one = false;
  Index value = 0;
  Index resolve(Index N) const { return n_plus_one ? N + 1 : value; }
};

struct SolverGroup {
  std::string formulation = "auto";
  std::vector<PrecondKind> kinds{PrecondKind::Shat};
  std::vector<RankSpec> ranks{RankSpec{}};
  std::vector<MhatStrategy> mhats{MhatStrategy{}};
  std::vector<KSpec> ks{KSpec{}};
  double inner_tol = 1e-8;
  int inner_max_iter = 500;
  bool use_transform = true;
  bool parity = true;
  long line = 0;
};

struct BoundSettings {
  std::vector<double> dts;
  std::vector<MhatStrategy> mhats;
};

struct ExperimentConfig {
  std::string name;
  ProblemSpec problem;
  std::vector<Index> N_values;    // empty: problem.N
  std::vector<double> dt_values;  // empty: problem.dt
  std::vector<SolverGroup> solvers;
  int realizations = 10;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  int max_iter = 1000;
  bool timing = true;
  std::string output;
  BoundSettings bound;
  std::string source = "<config>";  // for error messages

  // `scale` names a [scale.<name>] section whose keys override [problem].
  static ExperimentConfig from_config(const ConfigFile& file, const std::string& scale = "");
  static ExperimentConfig load(const std::string& path, const std::string& scale = "");
};

struct GridEntry {
  Index N = 0;
  double dt = 0.0;
  SolverSettings settings;
};

// Order: N, dt, solver section, preconditioner, r, mhat, k. Combinations
// without a Schur block (P_C, none) are kept only for r = 0.
std::vector<GridEntry> expand_grid(const ExperimentConfig& cfg);

struct ExperimentRow {
  std::string formulation, preconditioner, mhat_strategy;
  Index r = 0, k = 0, N = 0;
  double dt = 0.0;
  double iterations_mean = 0.0;
  double wall_time_mean = 0.0;
  double inner_iter_mean = 0.0;  // inner CG iterations per Schur application
  double converged_fraction = 0.0;
  std::uint64_t seed = 0;
  int realizations = 0;
  std::string message;  // first solver error, if any
};

// Realization i uses seed cfg.seed + i. threads <= 0 reads STEIN4DVAR_THREADS.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg, int threads = 0);
int worker_count(int requested, std::size_t tasks);

std::string experiment_csv_header();
// With timing off the wall_time_mean column is written as NA so that output
// is reproducible byte for byte.
void write_experiment_csv(std::ostream& os, const std::vector<ExperimentRow>& rows, bool timing = true);

struct BoundRow {
  double dt = 0.0;
  std::string strategy;
  BoundReport report;
  std::string error;
};

std::vector<BoundRow> run_bound_table(const ProblemSpec& problem, const BoundSettings& settings);
// Rows (dt, quantity) and one column per Mhat strategy.
void write_bound_csv(std::ostream& os, const std::vector<BoundRow>& rows);

}  // namespace stein4dvar
