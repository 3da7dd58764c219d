#include "stein4dvar/diagnostics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <utility>

#include "stein4dvar/krylov.hpp"
#include "stein4dvar/stein.hpp"

namespace stein4dvar {

Matrix dense_from_operator(const std::function<Vector(const Vector&)>& f, Index dim) {
  Matrix out;
  for (Index k = 0; k < dim; ++k) {
    const Vector col = f(Vector::Unit(dim, k));
    if (k == 0) out.resize(col.size(), dim);
    out.col(k) = col;
  }
  return out;
}

namespace {

Matrix kron_identity(Index n, const Matrix& X) {
  Matrix K = Matrix::Zero(n * X.rows(), n * X.cols());
  for (Index j = 0; j < n; ++j) K.block(j * X.rows(), j * X.cols(), X.rows(), X.cols()) = X;
  return K;
}

Matrix sym(const Matrix& X) { return 0.5 * (X + X.transpose()); }

}  // namespace

DenseAssembly assemble_dense(const SystemData& sys, const Preconditioner* P) {
  const Index s = sys.state_dim(), p = sys.obs_dim(), n = sys.n_times();
  const Index ns = s * n, np = p * n, dim = 2 * ns + np;
  if (dim > kDenseAssemblyCap) throw std::invalid_argument("assemble_dense: system too large for dense assembly");
  DenseAssembly da;
  auto state_op = [&](auto&& f) {
    return dense_from_operator([&](const Vector& v) { return f(StateBlockMatrix::from_vec(v, s, n)).vec(); }, ns);
  };
  da.A = dense_from_operator([&](const Vector& v) { return apply_saddle(sys, SaddleTriple::from_vec(v, s, p, n)).vec(); },
                             dim);
  da.S = sym(state_op([&](const StateBlockMatrix& Z) { return apply_hessian(sys, Z); }));
  da.D = state_op([&](const StateBlockMatrix& Z) { return apply_D(sys, Z); });
  da.L = state_op([&](const StateBlockMatrix& Z) { return apply_L(sys, Z); });
  da.Rb = dense_from_operator([&](const Vector& v) { return apply_R(sys, ObsBlockMatrix::from_vec(v, p, n)).vec(); },
                              np);
  da.Hb = state_op([&](const StateBlockMatrix& Z) { return apply_H(sys, Z); });
  if (!P) return da;

  da.Lhat = dense_from_operator(
      [&](const Vector& v) {
        const Matrix Z = P->lhat().apply(StateBlockMatrix::from_vec(v, s, n).mat());
        return Vector(Eigen::Map<const Vector>(Z.data(), Z.size()));
      },
      ns);
  da.P_C = Matrix::Zero(dim, dim);
  da.P_C.block(0, 0, ns, ns) = da.D;
  da.P_C.block(0, ns + np, ns, ns) = da.Lhat;
  da.P_C.block(ns, ns, np, np) = da.Rb;
  da.P_C.block(ns + np, 0, ns, ns) = da.Lhat.transpose();
  if (!P->has_schur()) return da;

  const Matrix Shat_inv = state_op([&](const StateBlockMatrix& Z) { return P->apply_schur_inv(Z); });
  da.Shat = sym(Shat_inv.inverse());
  da.P_D = Matrix::Zero(dim, dim);
  da.P_D.block(0, 0, ns, ns) = da.D;
  da.P_D.block(ns, ns, np, np) = da.Rb;
  da.P_D.block(ns + np, ns + np, ns, ns) = da.Shat;
  da.P_T = da.P_D;
  da.P_T.block(0, ns + np, ns, ns) = da.L;
  da.P_T.block(ns, ns + np, np, ns) = da.Hb;
  da.P_T.block(ns + np, ns + np, ns, ns) = -da.Shat;
  return da;
}

namespace {

Matrix random_gaussian(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix M(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) M(i, j) = nd(rng);
  return M;
}

Matrix random_spd(Index s, double cond, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_gaussian(s, s, rng));
  const Matrix Qm = qr.householderQ();
  Vector d(s);
  for (Index i = 0; i < s; ++i)
    d(i) = s > 1 ? std::pow(cond, static_cast<double>(i) / static_cast<double>(s - 1)) : 1.0;
  return sym(Qm * d.asDiagonal() * Qm.transpose());
}

}  // namespace

SystemData random_system(const RandomSystemSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix B = random_spd(spec.s, spec.cond_B, rng);
  const Matrix Q = random_spd(spec.s, spec.cond_Q, rng);
  const Matrix R = random_spd(spec.p, spec.cond_R, rng);
  const Matrix H = random_gaussian(spec.p, spec.s, rng);
  std::vector<Matrix> models;
  for (Index i = 0; i < spec.N; ++i) {
    const Matrix M = random_gaussian(spec.s, spec.s, rng);
    models.push_back(M * (spec.model_norm / Eigen::JacobiSVD<Matrix>(M).singularValues()(0)));
  }
  const Matrix b = random_gaussian(spec.s, spec.N + 1, rng);
  const Matrix d = random_gaussian(spec.p, spec.N + 1, rng);
  return SystemData(B, Q, R, H, models, StateBlockMatrix(b), ObsBlockMatrix(d));
}

SpectrumCase parse_spectrum_case(const std::string& text) {
  for (SpectrumCase c : all_spectrum_cases())
    if (spectrum_case_name(c) == text) return c;
  static const std::pair<const char*, SpectrumCase> aliases[] = {
      {"cor_diag", SpectrumCase::diag_exact_schur},  {"cor_triang", SpectrumCase::triang_exact_schur},
      {"prop_PC", SpectrumCase::constraint_exact_L}, {"prop_Shat_r0", SpectrumCase::schur_exact_L},
      {"prop_lowrank", SpectrumCase::schur_lowrank}, {"prop_intervals", SpectrumCase::diag_intervals},
      {"prop31", SpectrumCase::stein_bound},         {"thm21", SpectrumCase::basis_parity}};
  for (const auto& [name, c] : aliases)
    if (text == name) return c;
  throw std::invalid_argument("unknown spectrum case '" + text + "'");
}

std::string spectrum_case_name(SpectrumCase c) {
  switch (c) {
    case SpectrumCase::diag_exact_schur: return "diag_exact_schur";
    case SpectrumCase::triang_exact_schur: return "triang_exact_schur";
    case SpectrumCase::constraint_exact_L: return "constraint_exact_L";
    case SpectrumCase::schur_exact_L: return "schur_exact_L";
    case SpectrumCase::schur_lowrank: return "schur_lowrank";
    case SpectrumCase::diag_intervals: return "diag_intervals";
    case SpectrumCase::stein_bound: return "stein_bound";
    case SpectrumCase::basis_parity: return "basis_parity";
  }
  return "?";
}

std::vector<SpectrumCase> all_spectrum_cases() {
  return {SpectrumCase::diag_exact_schur, SpectrumCase::triang_exact_schur, SpectrumCase::constraint_exact_L,
          SpectrumCase::schur_exact_L,    SpectrumCase::schur_lowrank,      SpectrumCase::diag_intervals,
          SpectrumCase::stein_bound,      SpectrumCase::basis_parity};
}

SpectrumOptions default_spectrum_options(SpectrumCase c) {
  SpectrumOptions opt;
  switch (c) {
    case SpectrumCase::stein_bound:
      opt.system = {8, 3, 5, 1.0};
      break;
    case SpectrumCase::basis_parity:
      opt.system = {8, 4, 4, 0.9};
      break;
    case SpectrumCase::schur_lowrank:
    case SpectrumCase::diag_intervals:
      opt.system = {6, 3, 3, 0.9};
      opt.r = 1;
      break;
    default:
      opt.system = {6, 3, 2, 0.9};
  }
  return opt;
}

namespace {

// Preconditioner with Lhat = L and an explicitly given Schur approximation.
Preconditioner exact_L_preconditioner(const SystemData& sys, PrecondKind kind, const Matrix* Shat) {
  PrecondConfig cfg;
  cfg.kind = kind;
  auto lhat = std::make_shared<const KBlockL>(sys.models(), sys.n_times());
  std::shared_ptr<const SchurInverse> schur;
  if (Shat) schur = std::make_shared<const SchurDense>(*Shat);
  return Preconditioner(sys, cfg, lhat, schur);
}

// Dense P^-1 A, or A P^-1 when right is set, through the library operators.
Matrix preconditioned(const SystemData& sys, const Preconditioner& P, bool right) {
  const Index s = sys.state_dim(), p = sys.obs_dim(), n = sys.n_times();
  return dense_from_operator(
      [&](const Vector& v) {
        const SaddleTriple u = SaddleTriple::from_vec(v, s, p, n);
        return (right ? apply_saddle(sys, P.apply(u)) : P.apply(apply_saddle(sys, u))).vec();
      },
      (2 * s + p) * n);
}

double dist_to_set(double x, const std::vector<double>& targets) {
  double best = std::abs(x - targets.front());
  for (double t : targets) best = std::min(best, std::abs(x - t));
  return best;
}

// Dense L^T D^-1 L through the operators.
Matrix dense_first_term(const DenseAssembly& da) { return sym(da.L.transpose() * da.D.llt().solve(da.L)); }

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

SpectrumReport run_diag_exact(const SystemData& sys, double tol) {
  const DenseAssembly da = assemble_dense(sys);
  const Preconditioner P = exact_L_preconditioner(sys, PrecondKind::P_D, &da.S);
  const Eigen::VectorXcd ev = preconditioned(sys, P, false).eigenvalues();
  const double phi = 0.5 * (1.0 + std::sqrt(5.0)), psi = 0.5 * (1.0 - std::sqrt(5.0));
  SpectrumReport rep;
  rep.measured_min = ev.real().minCoeff();
  rep.measured_max = ev.real().maxCoeff();
  rep.unit_count = 0;
  long plus = 0, minus = 0;
  for (Index i = 0; i < ev.size(); ++i) {
    const double re = ev(i).real();
    rep.max_error = std::max({rep.max_error, std::abs(ev(i).imag()), dist_to_set(re, {psi, 1.0, phi})});
    rep.unit_count += std::abs(re - 1.0) <= tol;
    plus += std::abs(re - phi) <= tol;
    minus += std::abs(re - psi) <= tol;
  }
  const long ns = sys.state_dim() * sys.n_times();
  rep.expected_unit_count = sys.obs_dim() * sys.n_times();
  rep.pass = rep.max_error <= tol && rep.unit_count == rep.expected_unit_count && plus == ns && minus == ns;
  rep.detail = "multiplicities (psi, 1, phi) = (" + std::to_string(minus) + ", " + std::to_string(rep.unit_count) +
               ", " + std::to_string(plus) + ")";
  return rep;
}

SpectrumReport run_triang_exact(const SystemData& sys, double tol) {
  const DenseAssembly da = assemble_dense(sys);
  const Preconditioner P = exact_L_preconditioner(sys, PrecondKind::P_T, &da.S);
  const Matrix AP = preconditioned(sys, P, true);
  const Index ns = sys.state_dim() * sys.n_times(), top = AP.rows() - ns;
  // A P^-1 is block lower triangular with identity leading blocks, so its
  // spectrum is {1} together with the spectrum of the trailing block.
  SpectrumReport rep;
  const double lead = (AP.topLeftCorner(top, top) - Matrix::Identity(top, top)).cwiseAbs().maxCoeff();
  const double upper = AP.topRightCorner(top, ns).cwiseAbs().maxCoeff();
  const Eigen::VectorXcd ev = AP.bottomRightCorner(ns, ns).eigenvalues();
  double worst = 0.0;
  rep.measured_min = ev.real().minCoeff();
  rep.measured_max = ev.real().maxCoeff();
  for (Index i = 0; i < ev.size(); ++i) worst = std::max(worst, std::abs(ev(i) - 1.0));
  rep.max_error = std::max({lead, upper, worst});
  rep.unit_count = static_cast<long>(top);
  for (Index i = 0; i < ev.size(); ++i) rep.unit_count += std::abs(ev(i) - 1.0) <= tol;
  rep.expected_unit_count = static_cast<long>(AP.rows());
  rep.pass = rep.max_error <= tol && rep.unit_count == rep.expected_unit_count;
  rep.detail = "leading block deviation " + fmt(lead) + ", upper block " + fmt(upper) + ", trailing eigenvalues " +
               fmt(worst);
  return rep;
}

SpectrumReport run_constraint_exact(const SystemData& sys, double tol) {
  const Preconditioner P = exact_L_preconditioner(sys, PrecondKind::P_C, nullptr);
  const Eigen::VectorXcd ev = preconditioned(sys, P, false).eigenvalues();
  const DenseAssembly da = assemble_dense(sys);
  // Generalized form of R^-1 H L^-1 D L^-T H^T.
  const Matrix X = da.L.transpose().lu().solve(da.Hb.transpose().eval());
  const Matrix W = sym(X.transpose() * da.D * X);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(W, da.Rb, Eigen::EigenvaluesOnly);
  std::vector<double> expected;
  for (Index i = 0; i < ges.eigenvalues().size(); ++i) expected.push_back(std::sqrt(std::max(0.0, ges.eigenvalues()(i))));
  std::sort(expected.begin(), expected.end());

  SpectrumReport rep;
  std::vector<double> pos, neg;
  rep.unit_count = 0;
  double unit_err = 0.0;
  for (Index i = 0; i < ev.size(); ++i) {
    const std::complex<double> z = ev(i);
    if (std::abs(z - 1.0) <= tol) {
      ++rep.unit_count;
      unit_err = std::max(unit_err, std::abs(z - 1.0));
    } else if (z.imag() > 0) {
      pos.push_back(z.imag());
      rep.max_error = std::max(rep.max_error, std::abs(z.real() - 1.0));
    } else {
      neg.push_back(-z.imag());
      rep.max_error = std::max(rep.max_error, std::abs(z.real() - 1.0));
    }
  }
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  const long np = static_cast<long>(expected.size());
  rep.expected_unit_count = static_cast<long>(ev.size()) - 2 * np;
  bool sizes_ok = static_cast<long>(pos.size()) == np && static_cast<long>(neg.size()) == np;
  if (sizes_ok) {
    for (long i = 0; i < np; ++i) {
      const double scale = std::max(1.0, expected[static_cast<std::size_t>(i)]);
      rep.max_error = std::max(rep.max_error, std::abs(pos[static_cast<std::size_t>(i)] - expected[static_cast<std::size_t>(i)]) / scale);
      rep.max_error = std::max(rep.max_error, std::abs(neg[static_cast<std::size_t>(i)] - expected[static_cast<std::size_t>(i)]) / scale);
    }
  }
  rep.max_error = std::max(rep.max_error, unit_err);
  rep.measured_min = expected.empty() ? 0.0 : expected.front();
  rep.measured_max = expected.empty() ? 0.0 : expected.back();
  rep.pass = sizes_ok && rep.unit_count == rep.expected_unit_count && rep.max_error <= tol;
  rep.detail = "imaginary parts matched against " + std::to_string(np) + " square roots";
  return rep;
}

SpectrumReport run_schur(const SystemData& sys, Index r, double tol) {
  const DenseAssembly da = assemble_dense(sys);
  const Matrix F = dense_first_term(da);
  Matrix Shat = F;
  const Index n = sys.n_times(), s = sys.state_dim(), p = sys.obs_dim();
  const Matrix G = sys.H().transpose() * sys.R_factor().solve(sys.H());
  Eigen::SelfAdjointEigenSolver<Matrix> esG(sym(G), Eigen::EigenvaluesOnly);
  const Vector gvals = esG.eigenvalues().reverse();  // descending
  if (r > 0) {
    const Matrix K = build_lowrank(sys, r).factor();
    Shat += kron_identity(n, K * K.transpose());
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(da.S, Shat, Eigen::EigenvaluesOnly);
  const Vector ev = ges.eigenvalues();
  Eigen::SelfAdjointEigenSolver<Matrix> esF(F, Eigen::EigenvaluesOnly);
  const double lam_next = r < p ? std::max(0.0, gvals(r)) : 0.0;
  const double upper = 1.0 + lam_next / esF.eigenvalues().minCoeff();
  SpectrumReport rep;
  rep.measured_min = ev.minCoeff();
  rep.measured_max = ev.maxCoeff();
  const double unit_tol = tol * std::max(1.0, std::abs(rep.measured_max));
  rep.unit_count = 0;
  for (Index i = 0; i < ev.size(); ++i) rep.unit_count += std::abs(ev(i) - 1.0) <= unit_tol;
  rep.expected_unit_count = static_cast<long>((s + r - p) * n);
  rep.max_error = std::max(0.0, std::max(1.0 - 1e-10 - rep.measured_min, rep.measured_max - upper - tol));
  rep.pass = rep.measured_min >= 1.0 - 1e-10 && rep.measured_max <= upper + tol &&
             rep.unit_count == rep.expected_unit_count;
  rep.detail = "upper bound " + fmt(upper);
  return rep;
}

SpectrumReport run_diag_intervals(const SystemData& sys, Index r, double tol) {
  const DenseAssembly da = assemble_dense(sys);
  Matrix Shat = dense_first_term(da);
  if (r > 0) {
    const Matrix K = build_lowrank(sys, r).factor();
    Shat += kron_identity(sys.n_times(), K * K.transpose());
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(da.S, Shat, Eigen::EigenvaluesOnly);
  const double lS = ges.eigenvalues().minCoeff(), LS = ges.eigenvalues().maxCoeff();
  const Preconditioner P = exact_L_preconditioner(sys, PrecondKind::P_D, &Shat);
  const Eigen::VectorXcd ev = preconditioned(sys, P, false).eigenvalues();
  const double a1 = 0.5 * (1.0 - std::sqrt(1.0 + 4.0 * LS)), b1 = 0.5 * (1.0 - std::sqrt(1.0 + 4.0 * lS));
  const double a2 = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * lS)), b2 = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * LS));
  SpectrumReport rep;
  rep.measured_min = ev.real().minCoeff();
  rep.measured_max = ev.real().maxCoeff();
  const double scale = std::max(1.0, b2);
  for (Index i = 0; i < ev.size(); ++i) {
    const double x = ev(i).real();
    double d = std::abs(x - 1.0);
    d = std::min(d, x < a1 ? a1 - x : (x > b1 ? x - b1 : 0.0));
    d = std::min(d, x < a2 ? a2 - x : (x > b2 ? x - b2 : 0.0));
    rep.max_error = std::max({rep.max_error, d / scale, std::abs(ev(i).imag()) / scale});
  }
  rep.pass = rep.max_error <= tol;
  rep.detail = "[lambda_S, Lambda_S] = [" + fmt(lS) + ", " + fmt(LS) + "]";
  return rep;
}

SpectrumReport run_stein_bound(const SystemData& sys, double tol) {
  const Matrix mhat = symmetric_part(sys.model(1));
  const BoundReport br = stein_bound(sys.models(), mhat);
  const Index s = sys.state_dim(), n = sys.n_times();
  const DenseAssembly da = assemble_dense(sys);
  SteinL lhat(SteinPrecomputation::build(mhat, n));
  const Matrix Lh = dense_from_operator(
      [&](const Vector& v) {
        const Matrix Z = lhat.apply(StateBlockMatrix::from_vec(v, s, n).mat());
        return Vector(Eigen::Map<const Vector>(Z.data(), Z.size()));
      },
      s * n);
  const Matrix X = da.L * Lh.inverse();
  const double lam = std::pow(Eigen::JacobiSVD<Matrix>(X).singularValues()(0), 2);
  SpectrumReport rep;
  rep.measured_min = lam;
  rep.measured_max = br.upper_bound;
  rep.max_error = std::max(0.0, lam - br.upper_bound) / br.upper_bound;
  rep.pass = lam <= br.upper_bound * (1.0 + tol);
  rep.detail = "lambda_max " + fmt(lam) + " <= bound " + fmt(br.upper_bound);
  return rep;
}

SpectrumReport run_basis_parity(const SystemData& sys, double tol) {
  PrecondConfig cfg;
  cfg.kind = PrecondKind::P_D;
  cfg.mhat = MhatStrategy::parse("sym_first");
  Preconditioner P(sys, cfg);
  const LinearOp<SaddleTriple> A = [&](const SaddleTriple& v) { return apply_saddle(sys, v); };
  const PrecondOp<SaddleTriple> prec = [&](const SaddleTriple& v, BlockHint h) { return P.apply(v, h); };
  const SaddleTriple rhs = saddle_rhs(sys);
  SolveConfig sc;
  sc.tol = 1e-10;
  SolveReport plain, fast;
  double worst = 0.0;
  const SaddleTriple x1 = matgmres(A, prec, rhs, sc, plain, [&](int j, const SaddleTriple& v) {
    if (j > 20) return;
    const double zero_part = j % 2 == 1 ? v.x.norm() : std::hypot(v.theta.norm(), v.lambda.norm());
    worst = std::max(worst, zero_part / v.norm());
  });
  P.reset_counters();
  sc.parity_optimization = true;
  const SaddleTriple x2 = matgmres(A, prec, rhs, sc, fast);
  const PrecondCounters c = P.counters();
  const long m = fast.iterations;
  const double agree = (x1.vec() - x2.vec()).norm() / x1.norm();
  SpectrumReport rep;
  rep.measured_min = static_cast<double>(c.schur_applications);
  rep.measured_max = static_cast<double>(c.dr_applications);
  rep.unit_count = c.schur_applications;
  rep.expected_unit_count = m / 2;
  rep.max_error = worst;
  rep.pass = worst <= 1e-12 &&
             c.schur_applications == m / 2 && c.dr_applications == (m + 1) / 2 && agree <= 1e-9 &&
             plain.iterations == fast.iterations;
  (void)tol;
  rep.detail = "iterations " + std::to_string(m) + ", Schur applications " + std::to_string(c.schur_applications) +
               ", D/R applications " + std::to_string(c.dr_applications) + ", solution difference " + fmt(agree);
  return rep;
}

}  // namespace

SpectrumReport verify_spectrum(SpectrumCase c, std::uint64_t seed, const SpectrumOptions& opt) {
  const SpectrumOptions o = opt.use_case_defaults ? default_spectrum_options(c) : opt;
  const SystemData sys = random_system(o.system, seed);
  SpectrumReport rep;
  try {
    switch (c) {
      case SpectrumCase::diag_exact_schur: rep = run_diag_exact(sys, o.tol); break;
      case SpectrumCase::triang_exact_schur: rep = run_triang_exact(sys, o.tol); break;
      case SpectrumCase::constraint_exact_L: rep = run_constraint_exact(sys, o.tol); break;
      case SpectrumCase::schur_exact_L: rep = run_schur(sys, 0, o.tol); break;
      case SpectrumCase::schur_lowrank: rep = run_schur(sys, o.r, o.tol); break;
      case SpectrumCase::diag_intervals: rep = run_diag_intervals(sys, o.r, o.tol); break;
      case SpectrumCase::stein_bound: rep = run_stein_bound(sys, o.tol); break;
      case SpectrumCase::basis_parity: rep = run_basis_parity(sys, o.tol); break;
    }
  } catch (const std::exception& e) {
    rep.pass = false;
    rep.detail = std::string("error: ") + e.what();
  }
  rep.case_name = spectrum_case_name(c);
  rep.seed = seed;
  return rep;
}

void write_spectrum_csv(std::ostream& os, const std::vector<SpectrumReport>& reports) {
  os << "case,seed,measured_min,measured_max,unit_count,expected_unit_count,max_error,pass,detail\n";
  os << std::setprecision(10);
  for (const auto& r : reports) {
    std::string detail = r.detail;
    std::string quoted = "\"";
    for (char ch : detail) {
      if (ch == '"') quoted += '"';
      quoted += ch;
    }
    quoted += '"';
    os << r.case_name << ',' << r.seed << ',' << r.measured_min << ',' << r.measured_max << ',' << r.unit_count << ','
       << r.expected_unit_count << ',' << r.max_error << ',' << (r.pass ? 1 : 0) << ',' << quoted << '\n';
  }
}

}  // namespace stein4dvar
