#include "stein4dvar/precond.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace stein4dvar {

Matrix SteinL::apply(const Matrix& Z) const { return apply_stein_operator(pc_.mhat(), Z, false); }

Matrix SteinL::apply_transpose(const Matrix& Z) const { return apply_stein_operator(pc_.mhat(), Z, true); }

KBlockL::KBlockL(std::vector<Matrix> models, Index k) : models_(std::move(models)), k_(k) {
  const Index n = static_cast<Index>(models_.size()) + 1;
  if (k < 1 || k > n) throw std::invalid_argument("KBlockL: k must lie in [1, N+1]");
}

Matrix KBlockL::solve(const Matrix& V) const {
  Matrix Z = V;
  for (Index j = 1; j < Z.cols(); ++j)
    if (keeps(j)) Z.col(j).noalias() += models_[static_cast<std::size_t>(j - 1)] * Z.col(j - 1);
  return Z;
}

Matrix KBlockL::solve_transpose(const Matrix& V) const {
  Matrix Z = V;
  for (Index j = Z.cols() - 2; j >= 0; --j)
    if (keeps(j + 1)) Z.col(j).noalias() += models_[static_cast<std::size_t>(j)].transpose() * Z.col(j + 1);
  return Z;
}

Matrix KBlockL::apply(const Matrix& Z) const {
  Matrix out = Z;
  for (Index j = 1; j < Z.cols(); ++j)
    if (keeps(j)) out.col(j).noalias() -= models_[static_cast<std::size_t>(j - 1)] * Z.col(j - 1);
  return out;
}

Matrix KBlockL::apply_transpose(const Matrix& Z) const {
  Matrix out = Z;
  for (Index j = 0; j + 1 < Z.cols(); ++j)
    if (keeps(j + 1)) out.col(j).noalias() -= models_[static_cast<std::size_t>(j)].transpose() * Z.col(j + 1);
  return out;
}

LowRankUpdate build_lowrank(const Matrix& G, Index r) {
  if (r < 0 || r > G.rows()) throw std::invalid_argument("build_lowrank: rank out of range");
  LowRankUpdate lr;
  if (r == 0) {
    lr.V = Matrix::Zero(G.rows(), 0);
    lr.upsilon = Vector::Zero(0);
    return lr;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (G + G.transpose()));
  const Index s = G.rows();
  lr.V = es.eigenvectors().rightCols(r).rowwise().reverse();
  lr.upsilon = es.eigenvalues().tail(r).reverse().cwiseMax(0.0);
  (void)s;
  return lr;
}

LowRankUpdate build_lowrank(const SystemData& sys, Index r, const Matrix* T) {
  if (r > sys.obs_dim()) throw std::invalid_argument("build_lowrank: r must not exceed p");
  const Matrix Ht = T ? Matrix(sys.H() * *T) : sys.H();
  const Matrix G = Ht.transpose() * sys.R_factor().solve(Ht);
  return build_lowrank(G, r);
}

TransformedSystem TransformedSystem::build(const SystemData& sys, const Matrix& mhat, const SteinOptions& opt) {
  return build(sys, SteinPrecomputation::build(mhat, sys.n_times(), opt));
}

TransformedSystem TransformedSystem::build(const SystemData& sys, const SteinPrecomputation& full) {
  TransformedSystem ts;
  const Index s = sys.state_dim();
  if (full.real_eigvecs() && !full.is_diagonal()) {
    ts.T_ = full.T().real();
    ts.T_inv_ = full.T_inv().real();
    ts.lambda_ = full.eigvals().real();
    ts.B_t_ = ts.T_inv_ * sys.B() * ts.T_inv_.transpose();
    ts.Q_t_ = ts.T_inv_ * sys.Q() * ts.T_inv_.transpose();
    ts.B_t_ = 0.5 * (ts.B_t_ + ts.B_t_.transpose()).eval();
    ts.Q_t_ = 0.5 * (ts.Q_t_ + ts.Q_t_.transpose()).eval();
    ts.H_t_ = sys.H() * ts.T_;
    ts.pc_ = std::make_shared<const SteinPrecomputation>(
        SteinPrecomputation::diagonal(ts.lambda_, sys.n_times(), full.options()));
  } else {
    ts.identity_ = true;
    ts.T_ = Matrix::Identity(s, s);
    ts.T_inv_ = ts.T_;
    ts.B_t_ = sys.B();
    ts.Q_t_ = sys.Q();
    ts.H_t_ = sys.H();
    ts.lambda_ = full.eigvals().real();
    ts.pc_ = std::make_shared<const SteinPrecomputation>(full);
  }
  return ts;
}

Matrix TransformedSystem::state_from_tilde(const Matrix& Xt) const { return identity_ ? Xt : Matrix(T_ * Xt); }
Matrix TransformedSystem::state_to_tilde(const Matrix& X) const { return identity_ ? X : Matrix(T_inv_ * X); }
Matrix TransformedSystem::dual_from_tilde(const Matrix& Yt) const {
  return identity_ ? Yt : Matrix(T_inv_.transpose() * Yt);
}
Matrix TransformedSystem::dual_to_tilde(const Matrix& Y) const { return identity_ ? Y : Matrix(T_.transpose() * Y); }

SaddleTriple TransformedSystem::apply_calT(const SaddleTriple& vt) const {
  return {StateBlockMatrix(state_from_tilde(vt.theta.mat())), vt.lambda,
          StateBlockMatrix(dual_from_tilde(vt.x.mat()))};
}

SaddleTriple TransformedSystem::apply_calT_transpose(const SaddleTriple& v) const {
  return {StateBlockMatrix(dual_to_tilde(v.theta.mat())), v.lambda, StateBlockMatrix(state_to_tilde(v.x.mat()))};
}

Matrix TransformedSystem::apply_Dt(const Matrix& Z) const {
  Matrix out(Z.rows(), Z.cols());
  out.col(0).noalias() = B_t_ * Z.col(0);
  if (Z.cols() > 1) out.rightCols(Z.cols() - 1).noalias() = Q_t_ * Z.rightCols(Z.cols() - 1);
  return out;
}

Matrix TransformedSystem::apply_E(const Matrix& V) const {
  return solve_stein(*pc_, apply_Dt(solve_stein_transpose(*pc_, V)));
}

Matrix inner_action(const TransformedSystem& ts, const LowRankUpdate& lr, const Matrix& Z) {
  const Matrix G = lr.factor();
  if (Z.rows() != G.cols()) throw DimensionError("inner_action: Z must have r rows");
  return Z + G.transpose() * ts.apply_E(G * Z);
}

PrecondKind parse_precond_kind(const std::string& text) {
  if (text == "none") return PrecondKind::none;
  if (text == "Shat" || text == "shat") return PrecondKind::Shat;
  if (text == "P_D" || text == "PD") return PrecondKind::P_D;
  if (text == "P_T" || text == "PT") return PrecondKind::P_T;
  if (text == "P_C" || text == "PC") return PrecondKind::P_C;
  throw std::invalid_argument("unknown preconditioner '" + text + "'");
}

std::string precond_name(PrecondKind kind) {
  switch (kind) {
    case PrecondKind::none: return "none";
    case PrecondKind::Shat: return "Shat";
    case PrecondKind::P_D: return "P_D";
    case PrecondKind::P_T: return "P_T";
    case PrecondKind::P_C: return "P_C";
  }
  return "?";
}

Matrix SchurR0::apply(const Matrix& V, PrecondCounters& c) const {
  const Matrix W = lhat_->solve_transpose(V);
  const Matrix DW = apply_D(*sys_, StateBlockMatrix(W)).mat();
  c.stein_solves += 2 * lhat_->solves_per_call();
  return lhat_->solve(DW);
}

Matrix SchurWoodbury::apply(const Matrix& V, PrecondCounters& c) const {
  const TransformedSystem& ts = *ts_;
  const Matrix Vt = ts.dual_to_tilde(V);
  const Matrix W = ts.apply_E(Vt);
  c.stein_solves += 2;
  const Matrix Y = G_.transpose() * W;
  long applications = 0;
  LinearOp<Matrix> op = [&](const Matrix& Z) {
    ++applications;
    return Matrix(Z + G_.transpose() * ts.apply_E(G_ * Z));
  };
  int iters = 0;
  const Matrix X = inner_matcg(op, Y, tol_, max_iter_, &iters);
  c.inner_iterations += iters;
  const Matrix res = W - ts.apply_E(G_ * X);
  c.stein_solves += 2 * (applications + 1);
  return ts.state_from_tilde(res);
}

SchurWoodburyGeneric::SchurWoodburyGeneric(const SystemData& sys, std::shared_ptr<const ApproxL> lhat,
                                           LowRankUpdate lr, double inner_tol, int inner_max_iter)
    : sys_(&sys), lhat_(std::move(lhat)), lr_(std::move(lr)), G_(lr_.factor()), tol_(inner_tol),
      max_iter_(inner_max_iter) {}

Matrix SchurWoodburyGeneric::apply_E(const Matrix& V, PrecondCounters& c) const {
  c.stein_solves += 2 * lhat_->solves_per_call();
  return lhat_->solve(apply_D(*sys_, StateBlockMatrix(lhat_->solve_transpose(V))).mat());
}

Matrix SchurWoodburyGeneric::apply(const Matrix& V, PrecondCounters& c) const {
  const Matrix W = apply_E(V, c);
  const Matrix Y = G_.transpose() * W;
  LinearOp<Matrix> op = [&](const Matrix& Z) { return Matrix(Z + G_.transpose() * apply_E(G_ * Z, c)); };
  int iters = 0;
  const Matrix X = inner_matcg(op, Y, tol_, max_iter_, &iters);
  c.inner_iterations += iters;
  return W - apply_E(G_ * X, c);
}

SchurDense::SchurDense(const Matrix& Shat) : llt_(spd_factor(0.5 * (Shat + Shat.transpose()), "Shat")) {}

Matrix SchurDense::apply(const Matrix& V, PrecondCounters&) const {
  const Vector v = Eigen::Map<const Vector>(V.data(), V.size());
  const Vector z = llt_.solve(v);
  return Eigen::Map<const Matrix>(z.data(), V.rows(), V.cols());
}

namespace {
std::shared_ptr<std::atomic<long>[]> make_counters() {
  return std::shared_ptr<std::atomic<long>[]>(new std::atomic<long>[4]());
}
}  // namespace

Preconditioner::Preconditioner(const SystemData& sys, const PrecondConfig& cfg)
    : Preconditioner(sys, cfg, select_mhat(sys.models(), cfg.mhat)) {}

Preconditioner::Preconditioner(const SystemData& sys, const PrecondConfig& cfg, const Matrix& mhat)
    : sys_(&sys), cfg_(cfg), counters_(make_counters()) {
  init_stein(mhat);
}

Preconditioner::Preconditioner(const SystemData& sys, const PrecondConfig& cfg, std::shared_ptr<const ApproxL> lhat,
                               std::shared_ptr<const SchurInverse> schur)
    : sys_(&sys), cfg_(cfg), lhat_(std::move(lhat)), schur_(std::move(schur)), counters_(make_counters()) {}

void Preconditioner::init_stein(const Matrix& mhat) {
  if (cfg_.r < 0 || cfg_.r > sys_->obs_dim()) throw std::invalid_argument("Preconditioner: r must lie in [0, p]");
  mhat_ = mhat;
  auto full = SteinPrecomputation::build(mhat, sys_->n_times(), cfg_.stein);
  const bool needs_schur = cfg_.kind != PrecondKind::P_C && cfg_.kind != PrecondKind::none;
  if (needs_schur && cfg_.r > 0 && cfg_.use_transform) {
    auto ts = std::make_shared<const TransformedSystem>(TransformedSystem::build(*sys_, full));
    LowRankUpdate lr = build_lowrank(*sys_, cfg_.r, ts->identity() ? nullptr : &ts->T());
    schur_ = std::make_shared<const SchurWoodbury>(ts, std::move(lr), cfg_.inner_tol, cfg_.inner_max_iter);
  }
  lhat_ = std::make_shared<const SteinL>(std::move(full));
  if (needs_schur && !schur_) {
    if (cfg_.r > 0)
      schur_ = std::make_shared<const SchurWoodburyGeneric>(*sys_, lhat_, build_lowrank(*sys_, cfg_.r),
                                                            cfg_.inner_tol, cfg_.inner_max_iter);
    else
      schur_ = std::make_shared<const SchurR0>(*sys_, lhat_);
  }
}

Preconditioner Preconditioner::kblock(const SystemData& sys, const PrecondConfig& cfg, Index k) {
  auto lhat = std::make_shared<const KBlockL>(sys.models(), k);
  std::shared_ptr<const SchurInverse> schur;
  if (cfg.kind != PrecondKind::P_C && cfg.kind != PrecondKind::none) {
    if (cfg.r > 0)
      schur = std::make_shared<const SchurWoodburyGeneric>(sys, lhat, build_lowrank(sys, cfg.r), cfg.inner_tol,
                                                           cfg.inner_max_iter);
    else
      schur = std::make_shared<const SchurR0>(sys, lhat);
  }
  return Preconditioner(sys, cfg, lhat, schur);
}

void Preconditioner::bump(const PrecondCounters& c) const {
  counters_[0] += c.schur_applications;
  counters_[1] += c.stein_solves;
  counters_[2] += c.inner_iterations;
  counters_[3] += c.dr_applications;
}

PrecondCounters Preconditioner::counters() const {
  return {counters_[0].load(), counters_[1].load(), counters_[2].load(), counters_[3].load()};
}

void Preconditioner::reset_counters() const {
  for (int i = 0; i < 4; ++i) counters_[i] = 0;
}

StateBlockMatrix Preconditioner::apply_schur_inv(const StateBlockMatrix& V) const {
  if (!schur_) throw std::logic_error("Preconditioner: no Schur complement approximation configured");
  PrecondCounters c;
  c.schur_applications = 1;
  StateBlockMatrix out(schur_->apply(V.mat(), c));
  bump(c);
  return out;
}

StateBlockMatrix Preconditioner::apply_lhat_inv(const StateBlockMatrix& V, bool transpose) const {
  PrecondCounters c;
  c.stein_solves = lhat_->solves_per_call();
  StateBlockMatrix out(transpose ? lhat_->solve_transpose(V.mat()) : lhat_->solve(V.mat()));
  bump(c);
  return out;
}

SaddleTriple Preconditioner::apply_P_D_inv(const SaddleTriple& v, BlockHint hint) const {
  SaddleTriple out = v.zeros_like();
  if (hint != BlockHint::first_two_zero) {
    out.theta = apply_D(*sys_, v.theta, true);
    out.lambda = apply_Rinv(*sys_, v.lambda);
    PrecondCounters c;
    c.dr_applications = 1;
    bump(c);
  }
  if (hint != BlockHint::third_zero) out.x = apply_schur_inv(v.x);
  return out;
}

SaddleTriple Preconditioner::apply_P_T_inv(const SaddleTriple& v) const {
  // P_T = [[D, 0, L], [0, R, H], [0, 0, -Shat]]
  SaddleTriple out;
  out.x = apply_schur_inv(v.x);
  out.x *= -1.0;
  out.lambda = apply_Rinv(*sys_, v.lambda - apply_H(*sys_, out.x));
  out.theta = apply_D(*sys_, v.theta - apply_L(*sys_, out.x), true);
  return out;
}

SaddleTriple Preconditioner::apply_P_C_inv(const SaddleTriple& v) const {
  // P_C = [[D, 0, Lhat], [0, R, 0], [Lhat^T, 0, 0]]
  SaddleTriple out;
  out.theta = apply_lhat_inv(v.x, true);
  out.lambda = apply_Rinv(*sys_, v.lambda);
  out.x = apply_lhat_inv(v.theta - apply_D(*sys_, out.theta));
  return out;
}

SaddleTriple Preconditioner::apply(const SaddleTriple& v, BlockHint hint) const {
  switch (cfg_.kind) {
    case PrecondKind::none: return v;
    case PrecondKind::P_D: return apply_P_D_inv(v, hint);
    case PrecondKind::P_T: return apply_P_T_inv(v);
    case PrecondKind::P_C: return apply_P_C_inv(v);
    case PrecondKind::Shat: break;
  }
  throw std::logic_error("Preconditioner: Shat acts on state blocks, not saddle vectors");
}

}  // namespace stein4dvar
