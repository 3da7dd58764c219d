#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>

#include "stein4dvar/core.hpp"
#include "stein4dvar/krylov.hpp"
#include "stein4dvar/stein.hpp"

namespace stein4dvar {

// Action of an approximation Lhat of L and of its inverse.
class ApproxL {
 public:
  virtual ~ApproxL() = default;
  virtual Matrix solve(const Matrix& V) const = 0;            // Lhat^-1 V
  virtual Matrix solve_transpose(const Matrix& V) const = 0;  // Lhat^-T V
  virtual Matrix apply(const Matrix& Z) const = 0;            // Lhat Z
  virtual Matrix apply_transpose(const Matrix& Z) const = 0;  // Lhat^T Z
  virtual long solves_per_call() const { return 1; }
};

// Lhat = I (x) I - Sigma (x) Mhat, inverted through the Stein solvers.
class SteinL : public ApproxL {
 public:
  explicit SteinL(SteinPrecomputation pc) : pc_(std::move(pc)) {}
  Matrix solve(const Matrix& V) const override { return solve_stein(pc_, V); }
  Matrix solve_transpose(const Matrix& V) const override { return solve_stein_transpose(pc_, V); }
  Matrix apply(const Matrix& Z) const override;
  Matrix apply_transpose(const Matrix& Z) const override;
  const SteinPrecomputation& precomputation() const { return pc_; }

 private:
  SteinPrecomputation pc_;
};

// Lhat equal to L except that the link from state j-1 to state j is dropped
// whenever j mod k == 0 (j = 1..N). k = N+1 gives L, k = 1 gives I.
class KBlockL : public ApproxL {
 public:
  KBlockL(std::vector<Matrix> models, Index k);
  Matrix solve(const Matrix& V) const override;
  Matrix solve_transpose(const Matrix& V) const override;
  Matrix apply(const Matrix& Z) const override;
  Matrix apply_transpose(const Matrix& Z) const override;
  long solves_per_call() const override { return 0; }
  bool keeps(Index j) const { return j % k_ != 0; }  // 1-based link index
  Index k() const { return k_; }

 private:
  std::vector<Matrix> models_;
  Index k_;
};

struct LowRankUpdate {
  Matrix V;         // s x r, orthonormal columns
  Vector upsilon;   // r eigenvalues, descending
  Index rank() const { return upsilon.size(); }
  Matrix factor() const { return V * upsilon.cwiseMax(0.0).cwiseSqrt().asDiagonal(); }  // G_r
};

// Leading r eigenpairs of a symmetric positive semidefinite matrix.
LowRankUpdate build_lowrank(const Matrix& G, Index r);
// From H^T R^-1 H, or from T^T H^T R^-1 H T when T is given.
LowRankUpdate build_lowrank(const SystemData& sys, Index r, const Matrix* T = nullptr);

// Congruence with blockdiag(I (x) T, I, I (x) T^-T) so that Lhat becomes
// I (x) I - Sigma (x) Lambda. Falls back to T = I with the full Stein
// precomputation when the eigenvectors of Mhat are complex.
class TransformedSystem {
 public:
  static TransformedSystem build(const SystemData& sys, const Matrix& mhat, const SteinOptions& opt = {});
  static TransformedSystem build(const SystemData& sys, const SteinPrecomputation& full);

  bool identity() const { return identity_; }
  const Matrix& T() const { return T_; }
  const Matrix& T_inv() const { return T_inv_; }
  const Matrix& B_t() const { return B_t_; }
  const Matrix& Q_t() const { return Q_t_; }
  const Matrix& H_t() const { return H_t_; }
  const Vector& eigvals() const { return lambda_; }
  const SteinPrecomputation& stein() const { return *pc_; }

  // x = (I (x) T) x_t and back.
  Matrix state_from_tilde(const Matrix& Xt) const;
  Matrix state_to_tilde(const Matrix& X) const;
  // Dual variables: theta = (I (x) T^-T) theta_t and back.
  Matrix dual_from_tilde(const Matrix& Yt) const;
  Matrix dual_to_tilde(const Matrix& Y) const;
  // Saddle vectors: v = calT v_t with calT = blockdiag(I (x) T, I, I (x) T^-T).
  SaddleTriple apply_calT(const SaddleTriple& vt) const;
  SaddleTriple apply_calT_transpose(const SaddleTriple& v) const;

  Matrix apply_Dt(const Matrix& Z) const;
  // E_t = Lt^-1 D_t Lt^-T.
  Matrix apply_E(const Matrix& V) const;

 private:
  bool identity_ = false;
  Matrix T_, T_inv_, B_t_, Q_t_, H_t_;
  Vector lambda_;
  std::shared_ptr<const SteinPrecomputation> pc_;
};

// Z + G^T E_t G Z for the r x (N+1) correction system.
Matrix inner_action(const TransformedSystem& ts, const LowRankUpdate& lr, const Matrix& Z);

struct PrecondCounters {
  long schur_applications = 0;
  long stein_solves = 0;
  long inner_iterations = 0;
  long dr_applications = 0;  // applications of D^-1 and R^-1 inside P_D
};

enum class PrecondKind { none, Shat, P_D, P_T, P_C };
PrecondKind parse_precond_kind(const std::string& text);
std::string precond_name(PrecondKind kind);

struct PrecondConfig {
  PrecondKind kind = PrecondKind::Shat;
  Index r = 0;
  double inner_tol = 1e-8;
  int inner_max_iter = 500;
  MhatStrategy mhat;
  bool use_transform = true;
  SteinOptions stein;
};

// Inverse of Shat = Lhat^T D^-1 Lhat + K_r K_r^T.
class SchurInverse {
 public:
  virtual ~SchurInverse() = default;
  virtual Matrix apply(const Matrix& V, PrecondCounters& c) const = 0;
  virtual bool variable() const { return false; }
};

// r = 0: Lhat^-1 D Lhat^-T.
class SchurR0 : public SchurInverse {
 public:
  SchurR0(const SystemData& sys, std::shared_ptr<const ApproxL> lhat) : sys_(&sys), lhat_(std::move(lhat)) {}
  Matrix apply(const Matrix& V, PrecondCounters& c) const override;

 private:
  const SystemData* sys_;
  std::shared_ptr<const ApproxL> lhat_;
};

// r > 0: Woodbury form E - E K (I + K^T E K)^-1 K^T E with an inner CG, in
// transformed coordinates.
class SchurWoodbury : public SchurInverse {
 public:
  SchurWoodbury(std::shared_ptr<const TransformedSystem> ts, LowRankUpdate lr, double inner_tol, int inner_max_iter)
      : ts_(std::move(ts)), lr_(std::move(lr)), G_(lr_.factor()), tol_(inner_tol), max_iter_(inner_max_iter) {}
  Matrix apply(const Matrix& V, PrecondCounters& c) const override;
  bool variable() const override { return true; }
  const LowRankUpdate& lowrank() const { return lr_; }

 private:
  std::shared_ptr<const TransformedSystem> ts_;
  LowRankUpdate lr_;
  Matrix G_;
  double tol_;
  int max_iter_;
};

// Same Woodbury form with a generic Lhat in the original coordinates.
class SchurWoodburyGeneric : public SchurInverse {
 public:
  SchurWoodburyGeneric(const SystemData& sys, std::shared_ptr<const ApproxL> lhat, LowRankUpdate lr,
                       double inner_tol, int inner_max_iter);
  Matrix apply(const Matrix& V, PrecondCounters& c) const override;
  bool variable() const override { return true; }

 private:
  Matrix apply_E(const Matrix& V, PrecondCounters& c) const;
  const SystemData* sys_;
  std::shared_ptr<const ApproxL> lhat_;
  LowRankUpdate lr_;
  Matrix G_;
  double tol_;
  int max_iter_;
};

// Explicit dense inverse, for small diagnostic instances.
class SchurDense : public SchurInverse {
 public:
  explicit SchurDense(const Matrix& Shat);
  Matrix apply(const Matrix& V, PrecondCounters& c) const override;

 private:
  Eigen::LLT<Matrix> llt_;
};

class Preconditioner {
 public:
  // Mhat from cfg.mhat, Lhat the Stein operator.
  Preconditioner(const SystemData& sys, const PrecondConfig& cfg);
  Preconditioner(const SystemData& sys, const PrecondConfig& cfg, const Matrix& mhat);
  // Custom Lhat and Schur inverse (k-block baseline, dense diagnostics).
  Preconditioner(const SystemData& sys, const PrecondConfig& cfg, std::shared_ptr<const ApproxL> lhat,
                 std::shared_ptr<const SchurInverse> schur);

  static Preconditioner kblock(const SystemData& sys, const PrecondConfig& cfg, Index k);

  const PrecondConfig& config() const { return cfg_; }
  const Matrix& mhat() const { return mhat_; }
  bool variable() const { return schur_ && schur_->variable(); }
  bool has_schur() const { return static_cast<bool>(schur_); }
  const ApproxL& lhat() const { return *lhat_; }

  StateBlockMatrix apply_schur_inv(const StateBlockMatrix& V) const;
  StateBlockMatrix apply_lhat_inv(const StateBlockMatrix& V, bool transpose = false) const;

  SaddleTriple apply_P_D_inv(const SaddleTriple& v, BlockHint hint = BlockHint::none) const;
  SaddleTriple apply_P_T_inv(const SaddleTriple& v) const;
  SaddleTriple apply_P_C_inv(const SaddleTriple& v) const;
  // Dispatch on cfg.kind for saddle vectors.
  SaddleTriple apply(const SaddleTriple& v, BlockHint hint = BlockHint::none) const;

  PrecondCounters counters() const;
  void reset_counters() const;

 private:
  void init_stein(const Matrix& mhat);
  void bump(const PrecondCounters& c) const;

  const SystemData* sys_;
  PrecondConfig cfg_;
  Matrix mhat_;
  std::shared_ptr<const ApproxL> lhat_;
  std::shared_ptr<const SchurInverse> schur_;
  mutable std::shared_ptr<std::atomic<long>[]> counters_;
};

}  // namespace stein4dvar
