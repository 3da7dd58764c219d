#pragma once

#include <string>
#include <vector>

#include "stein4dvar/circulant.hpp"
#include "stein4dvar/core.hpp"

namespace stein4dvar {

// Which eigenvector factor closes the forward Stein solve, Z = T(Y-W)F^-1 or
// Z = T^-1(Y-W)F^-1. Only the first one solves the equation; the second is
// kept so the residual test can show it.
enum class BackTransform { T, Tinv };

struct SteinOptions {
  double singularity_floor = 1e-12;
  double max_eigvec_condition = 1e8;
  double eig_check_tol = 1e-10;
  double imag_tol = 1e-8;
  bool check_residual = true;
  double residual_tol = 1e-8;  // on the normwise backward error
  BackTransform back_transform = BackTransform::T;
  // Zero-pad the time axis to the smallest 2^a 3^b 5^c 7^d >= n before the
  // DFTs. The recursion is causal, so the first n columns are unchanged.
  bool smooth_fft_size = true;
};

// Smallest 2^a 3^b 5^c 7^d that is >= n.
Index smooth_size(Index n);

// Precomputed data for Z - Mhat Z Sigma^T = V and Z - Mhat^T Z Sigma = V with
// Mhat = T diag(lambda) T^-1.
class SteinPrecomputation {
 public:
  static SteinPrecomputation build(const Matrix& mhat, Index n, const SteinOptions& opt = {});
  // T = I, Mhat = diag(lambda).
  static SteinPrecomputation diagonal(const Vector& lambda, Index n, const SteinOptions& opt = {});

  Index state_dim() const { return lambda_.size(); }
  Index n_times() const { return n_; }
  Index fft_size() const { return shift_.size(); }

  const CMatrix& T() const { return T_; }
  const CMatrix& T_inv() const { return T_inv_; }
  const CVector& eigvals() const { return lambda_; }
  const CMatrix& P() const { return P_; }
  const CVector& U_diag() const { return U_; }
  const CirculantShift& shift() const { return shift_; }
  const SteinOptions& options() const { return opt_; }

  bool is_diagonal() const { return diagonal_; }
  bool real_eigvecs() const { return real_T_; }
  double eigvec_condition() const { return cond_; }

  // Dense Mhat as reconstructed from the factors (real part).
  const Matrix& mhat() const { return mhat_; }

 private:
  SteinPrecomputation(Index n, const SteinOptions& opt)
      : n_(n), shift_(opt.smooth_fft_size ? smooth_size(n) : n), opt_(opt) {}
  void finish();

  Index n_;
  CirculantShift shift_;
  SteinOptions opt_;
  CMatrix T_, T_inv_;
  Matrix T_real_, T_inv_real_;
  CVector lambda_;
  CMatrix P_;
  CVector U_;
  Matrix mhat_;
  bool diagonal_ = false;
  bool real_T_ = false;
  double cond_ = 1.0;

  friend Matrix solve_stein(const SteinPrecomputation&, const Matrix&);
  friend Matrix solve_stein_transpose(const SteinPrecomputation&, const Matrix&);
};

// Z with Z - Mhat Z Sigma^T = V.
Matrix solve_stein(const SteinPrecomputation& pc, const Matrix& V);
// Z with Z - Mhat^T Z Sigma = V.
Matrix solve_stein_transpose(const SteinPrecomputation& pc, const Matrix& V);

StateBlockMatrix solve_stein(const SteinPrecomputation& pc, const StateBlockMatrix& V);
StateBlockMatrix solve_stein_transpose(const SteinPrecomputation& pc, const StateBlockMatrix& V);

struct MhatStrategy {
  enum class Kind { sym_first, sym_last, sym_index, karcher, min_norm_heuristic, exact_when_constant };
  Kind kind = Kind::sym_first;
  Index index = 1;  // 1-based, sym_index only

  static MhatStrategy parse(const std::string& text);
  std::string name() const;
};

Matrix symmetric_part(const Matrix& M);

struct KarcherOptions {
  double step = 1.0;
  double tol = 1e-10;
  int max_iter = 200;
};

Matrix karcher_mean(const std::vector<Matrix>& mats, const KarcherOptions& opt = {});

Matrix select_mhat(const std::vector<Matrix>& models, const MhatStrategy& strategy);

struct BoundReport {
  double mhat_norm = 0.0;
  double growth = 0.0;  // lambda_max(Mhat^T Mhat)
  double max_D = 0.0;   // max_m lambda_max(D_m^T D_m), D_m = Mhat - M_m
  double rho_N = 0.0;
  double upper_bound = 0.0;
};

// rho_N = g(N, growth) * max_defect with g the geometric sum of growth^k,
// k < N (or N when growth == 1), then 1 + N/2 (rho + sqrt(rho^2 + 4 rho)).
double stein_rho(Index N, double growth, double max_defect);
double stein_bound_value(Index N, double growth, double max_defect);

BoundReport stein_bound(const std::vector<Matrix>& models, const Matrix& mhat);

}  // namespace stein4dvar
