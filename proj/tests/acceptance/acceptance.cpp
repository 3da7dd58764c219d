// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "oracle/dense_oracle.hpp"
#include "stein4dvar/diagnostics.hpp"
#include "stein4dvar/experiment.hpp"
#include "stein4dvar/krylov.hpp"
#include "stein4dvar/precond.hpp"
#include "stein4dvar/problems.hpp"
#include "stein4dvar/stein.hpp"
#include "test_helpers.hpp"

using namespace stein4dvar;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs a spectrum case over seeds 1..count.
Outcome spectrum_seeds(SpectrumCase c, int count, const SpectrumOptions* opt = nullptr) {
  int passed = 0;
  double worst = 0.0;
  std::string first_failure;
  for (int seed = 1; seed <= count; ++seed) {
    const SpectrumReport r = opt ? verify_spectrum(c, seed, *opt) : verify_spectrum(c, seed);
    worst = std::max(worst, r.max_error);
    if (r.pass) ++passed;
    else if (first_failure.empty()) first_failure = " first failure seed " + std::to_string(seed) + ": " + r.detail;
  }
  return {passed == count,
          std::to_string(passed) + "/" + std::to_string(count) + " seeds, max error " + fmt(worst) + first_failure};
}

Outcome stein_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<Index> sdist(2, 20), Ndist(1, 15);
  std::uniform_real_distribution<double> ndist(0.1, 1.2);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const Index s = sdist(rng), n = Ndist(rng) + 1;
    const double norm = ndist(rng);
    const Matrix mhat = inst % 2 == 0 ? oracle::random_symmetric_with_norm(s, norm, rng)
                                      : oracle::random_with_norm(s, norm, rng);
    const SteinPrecomputation pc = SteinPrecomputation::build(mhat, n);
    const Matrix V = oracle::random_matrix(s, n, rng);
    const Matrix K = oracle::dense_stein(mhat, n);
    const Vector v = oracle::block_to_vec(V);
    const Vector z = K.partialPivLu().solve(v);
    const Vector x = K.transpose().partialPivLu().solve(v);
    worst = std::max(worst, testing_util::rel_err(oracle::block_to_vec(solve_stein(pc, V)), z));
    worst = std::max(worst, testing_util::rel_err(oracle::block_to_vec(solve_stein_transpose(pc, V)), x));
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-10 && elapsed < 10.0,
          "50 instances, max relative error " + fmt(worst) + " (tol 1e-10), " + fmt(elapsed) + " s (limit 10 s)"};
}

Outcome schur_unit_counts() {
  Outcome r0 = spectrum_seeds(SpectrumCase::schur_exact_L, 20);
  std::string detail = "r=0: " + r0.detail;
  bool pass = r0.pass;
  SpectrumOptions opt;
  opt.use_case_defaults = false;
  opt.system = {6, 3, 3, 0.9};
  for (Index r = 1; r <= 3; ++r) {
    opt.r = r;
    const Outcome o = spectrum_seeds(SpectrumCase::schur_lowrank, 20, &opt);
    pass = pass && o.pass;
    detail += "; r=" + std::to_string(r) + ": " + o.detail;
  }
  return {pass, detail};
}

Outcome stein_bound_check() {
  const Outcome seeds = spectrum_seeds(SpectrumCase::stein_bound, 50);
  const Vector x0 = lorenz96_spinup(100, 100, 0.05);
  auto bound_at = [&](double dt) {
    const auto models = lorenz96_models(x0, 10, dt);
    return stein_bound(models, symmetric_part(models.front())).upper_bound;
  };
  const double small = bound_at(1e-6), large = bound_at(1e-1);
  const bool trend = std::abs(small - 1.0) <= 0.1 && large >= 100.0 * small;
  return {seeds.pass && trend, seeds.detail + "; Lorenz96 s=100 bound " + fmt(small) + " at dt=1e-6, " +
                                   fmt(large) + " at dt=1e-1 (growth " + fmt(large / small) + ", need >= 100)"};
}

// Zero-block structure of the P_D basis, Schur work with the parity basis on,
// and agreement of the two solutions.
Outcome basis_parity() {
  int passed = 0, odd_m = 0;
  double worst_structure = 0.0, worst_agree = 0.0;
  std::string failure;
  for (int seed = 1; seed <= 20; ++seed) {
    const SystemData sys = random_system({8, 4, 4, 0.9}, seed);
    PrecondConfig cfg;
    cfg.kind = PrecondKind::P_D;
    cfg.mhat = MhatStrategy::parse("sym_first");
    Preconditioner P(sys, cfg);
    const LinearOp<SaddleTriple> A = [&](const SaddleTriple& v) { return apply_saddle(sys, v); };
    const PrecondOp<SaddleTriple> prec = [&](const SaddleTriple& v, BlockHint h) { return P.apply(v, h); };
    const SaddleTriple rhs = saddle_rhs(sys);
    SolveConfig sc;
    sc.tol = 1e-12;
    SolveReport plain, fast;
    double structure = 0.0;
    int observed = 0;
    const SaddleTriple x1 = matgmres(A, prec, rhs, sc, plain, [&](int j, const SaddleTriple& v) {
      if (j > 20) return;
      ++observed;
      const double zero_part = j % 2 == 1 ? v.x.norm() : std::hypot(v.theta.norm(), v.lambda.norm());
      structure = std::max(structure, zero_part / v.norm());
    });
    P.reset_counters();
    sc.parity_optimization = true;
    const SaddleTriple x2 = matgmres(A, prec, rhs, sc, fast);
    const PrecondCounters c = P.counters();
    const long m = fast.iterations;
    const double agree = (x1.vec() - x2.vec()).norm() / x1.norm();
    worst_structure = std::max(worst_structure, structure);
    worst_agree = std::max(worst_agree, agree);
    odd_m += m % 2;
    // Schur work: one application per even basis vector, at most ceil(m/2).
    const bool ok = structure <= 1e-12 && observed >= std::min<long>(20, plain.iterations) &&
                    c.schur_applications == m / 2 && c.schur_applications <= (m + 1) / 2 &&
                    c.dr_applications == (m + 1) / 2 && agree <= 1e-9 && plain.converged && fast.converged;
    if (ok) ++passed;
    else if (failure.empty())
      failure = " first failure seed " + std::to_string(seed) + ": m=" + std::to_string(m) + " Schur " +
                std::to_string(c.schur_applications) + " D/R " + std::to_string(c.dr_applications);
  }
  return {passed == 20, std::to_string(passed) + "/20 seeds (" + std::to_string(odd_m) +
                            " with odd m), structure " + fmt(worst_structure) +
                            " (tol 1e-12), Schur applications floor(m/2) <= ceil(m/2), solution difference " +
                            fmt(worst_agree) + " (tol 1e-9)" + failure};
}

// Heat problem at desk scale, r = p, one realization per N.
struct HeatRun {
  int cg_iters = 0, gmres_iters = 0;
  double inner_per_schur = 0.0;
  bool converged = false;
};

const std::map<Index, HeatRun>& heat_runs() {
  static const std::map<Index, HeatRun> runs = [] {
    std::map<Index, HeatRun> out;
    for (Index N : {10, 20, 30, 40}) {
      ProblemSpec ps;
      ps.N = N;
      const SystemData sys = make_realization(ps, 1);
      SolverSettings st;
      st.precond.r = ps.p;
      st.precond.inner_tol = 1e-8;
      st.precond.kind = PrecondKind::Shat;
      st.formulation = Formulation::spd;
      const SolveOutcome cg = solve_system(sys, st);
      st.precond.kind = PrecondKind::P_D;
      st.formulation = Formulation::saddle;
      const SolveOutcome gm = solve_system(sys, st);
      HeatRun h;
      h.cg_iters = cg.report.iterations;
      h.gmres_iters = gm.report.iterations;
      h.converged = cg.report.converged && gm.report.converged;
      h.inner_per_schur = static_cast<double>(gm.counters.inner_iterations) /
                          static_cast<double>(std::max(1L, gm.counters.schur_applications));
      out[N] = h;
    }
    return out;
  }();
  return runs;
}

Outcome rank_p_heat() {
  const auto& runs = heat_runs();
  bool pass = true;
  std::string cg = "matCG", gm = "matGMRES";
  const HeatRun& first = runs.begin()->second;
  for (const auto& [N, h] : runs) {
    pass = pass && h.converged && h.cg_iters <= 2 && h.gmres_iters <= 4 && h.cg_iters == first.cg_iters &&
           h.gmres_iters == first.gmres_iters;
    cg += " " + std::to_string(h.cg_iters);
    gm += " " + std::to_string(h.gmres_iters);
  }
  return {pass, "N=10,20,30,40: " + cg + " (limit 2), " + gm + " (limit 4), constant in N required"};
}

double max_history_gap(const SolveReport& a, const SolveReport& b) {
  if (a.residual_history.size() != b.residual_history.size()) return INFINITY;
  double gap = 0.0;
  for (std::size_t i = 0; i < a.residual_history.size(); ++i)
    gap = std::max(gap, std::abs(a.residual_history[i] - b.residual_history[i]));
  return gap;
}

Outcome mat_vec_equivalence() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto in = testing_util::random_instance(5, 3, 4, 100 + seed);
    const SystemData sys = in.system();
    const Index s = 5, p = 3, n = 5;
    SolveConfig sc;
    sc.tol = 1e-10;
    for (PrecondKind kind : {PrecondKind::P_D, PrecondKind::P_T, PrecondKind::P_C}) {
      PrecondConfig cfg;
      cfg.kind = kind;
      cfg.mhat = MhatStrategy::parse("sym_first");
      const Preconditioner P(sys, cfg);
      SolveReport mat, vec;
      matgmres([&](const SaddleTriple& v) { return apply_saddle(sys, v); },
               [&](const SaddleTriple& v, BlockHint h) { return P.apply(v, h); }, saddle_rhs(sys), sc, mat);
      vec_gmres([&](const Vector& v) { return apply_saddle(sys, SaddleTriple::from_vec(v, s, p, n)).vec(); },
                [&](const Vector& v) { return P.apply(SaddleTriple::from_vec(v, s, p, n)).vec(); },
                saddle_rhs(sys).vec(), sc, vec);
      worst = std::max(worst, max_history_gap(mat, vec));
    }
    PrecondConfig cfg;
    cfg.mhat = MhatStrategy::parse("sym_first");
    const Preconditioner P(sys, cfg);
    SolveReport mat, vec;
    matcg([&](const StateBlockMatrix& z) { return apply_hessian(sys, z); },
          [&](const StateBlockMatrix& z) { return P.apply_schur_inv(z); }, hessian_rhs(sys), sc, mat);
    vec_cg([&](const Vector& v) { return apply_hessian(sys, StateBlockMatrix::from_vec(v, s, n)).vec(); },
           [&](const Vector& v) { return P.apply_schur_inv(StateBlockMatrix::from_vec(v, s, n)).vec(); },
           hessian_rhs(sys).vec(), sc, vec);
    worst = std::max(worst, max_history_gap(mat, vec));
  }
  return {worst <= 1e-9, "10 seeds x {P_D, P_T, P_C, Shat}, max residual history gap " + fmt(worst) + " (tol 1e-9)"};
}

Outcome woodbury_identity() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto in = testing_util::random_instance(6, 4, 4, 300 + seed);
    const SystemData sys = in.system();
    const Index s = 6, n = 5;
    PrecondConfig cfg;
    cfg.r = 4;
    cfg.inner_tol = 1e-12;
    cfg.mhat = MhatStrategy::parse("sym_first");
    const Preconditioner P(sys, cfg);
    const Matrix Lhat = oracle::dense_stein(P.mhat(), n);
    const Matrix D = oracle::dense_D(in.B, in.Q, n);
    const Matrix G = in.H.transpose() * in.R.inverse() * in.H;
    const Matrix Shat = Lhat.transpose() * D.inverse() * Lhat + oracle::kron(Matrix::Identity(n, n), G);
    Matrix X(s * n, s * n);
    for (Index k = 0; k < s * n; ++k)
      X.col(k) = P.apply_schur_inv(StateBlockMatrix::from_vec(Vector::Unit(s * n, k), s, n)).vec();
    worst = std::max(worst, (X * Shat - Matrix::Identity(s * n, s * n)).norm());
  }
  return {worst <= 1e-7, "5 instances s=6, r=p=4, inner tol 1e-12, ||Shat^-1 Shat - I||_F " + fmt(worst) +
                             " (tol 1e-7)"};
}

Outcome lorenz96_tlm_check() {
  std::mt19937_64 rng(96);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Vector x(10);
    for (Index i = 0; i < 10; ++i) x(i) = 8.0 + 2.0 * nd(rng);
    const double dt = 0.05, eps = 1e-6;
    const Matrix M = lorenz96_tlm(x, dt);
    for (Index j = 0; j < 10; ++j) {
      const Vector e = eps * Vector::Unit(10, j);
      const Vector fd = (lorenz96_step(x + e, dt) - lorenz96_step(x - e, dt)) / (2.0 * eps);
      worst = std::max(worst, (fd - M.col(j)).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-6, "s=10, 10 states, max elementwise gap " + fmt(worst) + " (tol 1e-6)"};
}

Outcome scaling() {
  std::mt19937_64 rng(7);
  const Index s = 100;
  const Matrix mhat = oracle::random_symmetric_with_norm(s, 0.9, rng);
  // Batches of about 20 ms, sizes interleaved, minimum per size.
  const std::vector<Index> Ns = {64, 128, 256};
  std::vector<SteinPrecomputation> pcs;
  std::vector<Matrix> Vs;
  std::vector<int> batch;
  for (Index N : Ns) {
    pcs.push_back(SteinPrecomputation::build(mhat, N + 1));
    Vs.push_back(oracle::random_matrix(s, N + 1, rng));
    const auto t0 = std::chrono::steady_clock::now();
    solve_stein(pcs.back(), Vs.back());
    batch.push_back(std::max(1, static_cast<int>(0.02 / std::max(seconds_since(t0), 1e-6))));
  }
  std::vector<double> times(Ns.size(), INFINITY);
  for (int round = 0; round < 15; ++round)
    for (std::size_t i = 0; i < Ns.size(); ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      bool finite = true;
      for (int k = 0; k < batch[i]; ++k) finite = finite && solve_stein(pcs[i], Vs[i]).allFinite();
      times[i] = std::min(times[i], finite ? seconds_since(t0) / batch[i] : INFINITY);
    }
  const double r1 = times[1] / times[0], r2 = times[2] / times[1];
  const auto& runs = heat_runs();
  const double i10 = runs.at(10).inner_per_schur, i20 = runs.at(20).inner_per_schur,
               i40 = runs.at(40).inner_per_schur;
  const bool pass = r1 <= 2.5 && r2 <= 2.5 && i10 < i20 && i20 < i40;
  return {pass, "Stein time ratios " + fmt(r1) + ", " + fmt(r2) + " (limit 2.5); inner CG per Schur application " +
                    fmt(i10) + " -> " + fmt(i20) + " -> " + fmt(i40) + " at N=10,20,40 (must increase)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"stein_oracle", stein_oracle},
      {"diag_exact_schur", [] { return spectrum_seeds(SpectrumCase::diag_exact_schur, 20); }},
      {"triang_exact_schur", [] { return spectrum_seeds(SpectrumCase::triang_exact_schur, 20); }},
      {"constraint_exact_L", [] { return spectrum_seeds(SpectrumCase::constraint_exact_L, 20); }},
      {"schur_unit_counts", schur_unit_counts},
      {"stein_bound", stein_bound_check},
      {"basis_parity", basis_parity},
      {"rank_p_heat", rank_p_heat},
      {"mat_vec_equivalence", mat_vec_equivalence},
      {"woodbury_identity", woodbury_identity},
      {"lorenz96_tlm", lorenz96_tlm_check},
      {"scaling", scaling},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
