#include "stein4dvar/stein.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stein4dvar {

namespace {

using cd = std::complex<double>;

bool is_symmetric(const Matrix& M) {
  return (M - M.transpose()).norm() <= 1e-14 * std::max(1.0, M.norm());
}

double lambda_max_sym(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// Normwise backward error ||Z - Mhat Z Sigma^T - V|| / (||V|| + (1 + ||Mhat||) ||Z||),
// which stays small when V is small relative to Z through cancellation.
double relative_residual(const SteinPrecomputation& pc, const Matrix& Z, const Matrix& V,
                         bool transpose) {
  const double vn = V.norm();
  if (vn == 0.0) return Z.norm();
  const double mn = pc.is_diagonal() ? pc.eigvals().cwiseAbs().maxCoeff() : pc.mhat().norm();
  Matrix R;
  if (pc.is_diagonal()) {
    const Index n = Z.cols();
    R = Z - V;
    const Vector lam = pc.eigvals().real();
    if (n > 1) {
      if (!transpose)
        R.rightCols(n - 1) -= lam.asDiagonal() * Z.leftCols(n - 1);
      else
        R.leftCols(n - 1) -= lam.asDiagonal() * Z.rightCols(n - 1);
    }
  } else {
    R = apply_stein_operator(pc.mhat(), Z, transpose) - V;
  }
  return R.norm() / (vn + (1.0 + mn) * Z.norm());
}

Matrix take_real(const CMatrix& Zc, double imag_tol, const char* who) {
  const double zn = Zc.norm();
  const double in = Zc.imag().norm();
  if (in > imag_tol * std::max(zn, 1e-300) && in > 0.0) {
    std::ostringstream os;
    os << who << ": solution has imaginary part " << in << " (norm " << zn << ")";
    throw NumericalError(os.str());
  }
  return Zc.real();
}

}  // namespace

Index smooth_size(Index n) {
  if (n < 1) throw DimensionError("smooth_size: n must be positive");
  for (Index m = n;; ++m) {
    Index r = m;
    for (Index f : {2, 3, 5, 7})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

SteinPrecomputation SteinPrecomputation::build(const Matrix& mhat, Index n, const SteinOptions& opt) {
  if (mhat.rows() != mhat.cols()) throw DimensionError("Stein: Mhat must be square");
  SteinPrecomputation pc(n, opt);
  const Index s = mhat.rows();
  if (is_symmetric(mhat)) {
    Matrix sym = symmetric_part(mhat);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) throw NumericalError("Stein: symmetric eigensolve failed");
    pc.T_real_ = es.eigenvectors();
    pc.T_inv_real_ = pc.T_real_.transpose();
    pc.lambda_ = es.eigenvalues().cast<cd>();
    pc.real_T_ = true;
    pc.cond_ = 1.0;
  } else {
    Eigen::EigenSolver<Matrix> es(mhat);
    if (es.info() != Eigen::Success) throw NumericalError("Stein: eigensolve failed");
    CMatrix T = es.eigenvectors();
    pc.lambda_ = es.eigenvalues();
    Eigen::BDCSVD<CMatrix> svd(T);
    const auto& sv = svd.singularValues();
    pc.cond_ = sv(s - 1) > 0.0 ? sv(0) / sv(s - 1) : std::numeric_limits<double>::infinity();
    if (!(pc.cond_ <= opt.max_eigvec_condition)) {
      std::ostringstream os;
      os << "Stein: eigenvector matrix of Mhat is ill conditioned (cond ~ " << pc.cond_ << ")";
      throw NumericalError(os.str());
    }
    if (T.imag().norm() == 0.0 && pc.lambda_.imag().norm() == 0.0) {
      pc.T_real_ = T.real();
      pc.T_inv_real_ = pc.T_real_.partialPivLu().inverse();
      pc.real_T_ = true;
    } else {
      pc.T_ = T;
      pc.T_inv_ = T.partialPivLu().inverse();
    }
  }
  if (pc.real_T_) {
    pc.T_ = pc.T_real_.cast<cd>();
    pc.T_inv_ = pc.T_inv_real_.cast<cd>();
  }
  pc.mhat_ = mhat;
  const double mn = mhat.norm();
  if (mn > 0.0) {
    const double err = (pc.T_ * pc.lambda_.asDiagonal() * pc.T_inv_ - mhat.cast<cd>()).norm() / mn;
    if (err > opt.eig_check_tol) {
      std::ostringstream os;
      os << "Stein: eigendecomposition check failed (relative error " << err << ")";
      throw NumericalError(os.str());
    }
  }
  pc.finish();
  return pc;
}

SteinPrecomputation SteinPrecomputation::diagonal(const Vector& lambda, Index n, const SteinOptions& opt) {
  SteinPrecomputation pc(n, opt);
  const Index s = lambda.size();
  pc.diagonal_ = true;
  pc.real_T_ = true;
  pc.lambda_ = lambda.cast<cd>();
  pc.T_real_ = Matrix::Identity(s, s);
  pc.T_inv_real_ = pc.T_real_;
  pc.T_ = pc.T_real_.cast<cd>();
  pc.T_inv_ = pc.T_;
  pc.mhat_ = lambda.asDiagonal();
  pc.finish();
  return pc;
}

void SteinPrecomputation::finish() {
  const Index s = lambda_.size(), n = shift_.size();
  const CVector& pi = shift_.pi();
  P_.resize(s, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < s; ++i) {
      const cd den = 1.0 - lambda_(i) * pi(j);
      if (std::abs(den) < opt_.singularity_floor) {
        std::ostringstream os;
        os << "Stein: singular pencil at (i, j) = (" << i << ", " << j << "), |1 - lambda pi| = "
           << std::abs(den);
        throw NumericalError(os.str());
      }
      P_(i, j) = 1.0 / den;
    }
  }
  const CVector f = shift_.Finv_en();
  U_ = CVector::Ones(s) + lambda_.cwiseProduct(P_ * f);
  for (Index i = 0; i < s; ++i) {
    if (std::abs(U_(i)) < opt_.singularity_floor) {
      std::ostringstream os;
      os << "Stein: correction term U is singular at i = " << i;
      throw NumericalError(os.str());
    }
  }
}

Matrix solve_stein(const SteinPrecomputation& pc, const Matrix& V) {
  const Index s = pc.state_dim(), n = pc.n_times();
  if (V.rows() != s || V.cols() != n) throw DimensionError("solve_stein: shape mismatch");
  CMatrix X;
  if (pc.diagonal_)
    X = V.cast<cd>();
  else if (pc.real_T_)
    X = (pc.T_inv_real_ * V).cast<cd>();
  else
    X = pc.T_inv_ * V.cast<cd>();
  X.conservativeResize(Eigen::NoChange, pc.fft_size());
  X.rightCols(pc.fft_size() - n).setZero();
  CMatrix Y = pc.P_.cwiseProduct(pc.shift_.right_mul_F(X));
  const CVector u = (Y * pc.shift_.Finv_en()).cwiseQuotient(pc.U_);
  Y -= pc.lambda_.cwiseProduct(u).asDiagonal() * pc.P_;
  const CMatrix Zh = pc.shift_.right_mul_Finv(Y).leftCols(n);
  const bool use_T = pc.options().back_transform == BackTransform::T;
  Matrix Z;
  if (pc.diagonal_) {
    Z = take_real(Zh, pc.options().imag_tol, "solve_stein");
  } else if (pc.real_T_) {
    // T real: Re(T Zh) = T Re(Zh), so check the imaginary part before the product.
    Z = (use_T ? pc.T_real_ : pc.T_inv_real_) * take_real(Zh, pc.options().imag_tol, "solve_stein");
  } else {
    Z = take_real((use_T ? pc.T_ : pc.T_inv_) * Zh, pc.options().imag_tol, "solve_stein");
  }
  if (pc.options().check_residual) {
    const double res = relative_residual(pc, Z, V, false);
    if (res > pc.options().residual_tol) {
      std::ostringstream os;
      os << "solve_stein: relative residual " << res << " exceeds tolerance";
      throw NumericalError(os.str());
    }
  }
  return Z;
}

Matrix solve_stein_transpose(const SteinPrecomputation& pc, const Matrix& V) {
  const Index s = pc.state_dim(), n = pc.n_times();
  if (V.rows() != s || V.cols() != n) throw DimensionError("solve_stein_transpose: shape mismatch");
  CMatrix X;
  if (pc.diagonal_)
    X = V.cast<cd>();
  else if (pc.real_T_)
    X = (pc.T_real_.transpose() * V).cast<cd>();
  else
    X = pc.T_.transpose() * V.cast<cd>();
  X.conservativeResize(Eigen::NoChange, pc.fft_size());
  X.rightCols(pc.fft_size() - n).setZero();
  CMatrix G = pc.P_.cwiseProduct(pc.shift_.right_mul_Finv(X));
  const CVector u = G.rowwise().sum().cwiseQuotient(pc.U_);
  const CVector f = pc.shift_.Finv_en();
  G -= pc.P_.cwiseProduct(pc.lambda_.cwiseProduct(u) * f.transpose());
  const CMatrix Zh = pc.shift_.right_mul_F(G).leftCols(n);
  Matrix Z;
  if (pc.diagonal_)
    Z = take_real(Zh, pc.options().imag_tol, "solve_stein_transpose");
  else if (pc.real_T_)
    Z = pc.T_inv_real_.transpose() * take_real(Zh, pc.options().imag_tol, "solve_stein_transpose");
  else
    Z = take_real(pc.T_inv_.transpose() * Zh, pc.options().imag_tol, "solve_stein_transpose");
  if (pc.options().check_residual) {
    const double res = relative_residual(pc, Z, V, true);
    if (res > pc.options().residual_tol) {
      std::ostringstream os;
      os << "solve_stein_transpose: relative residual " << res << " exceeds tolerance";
      throw NumericalError(os.str());
    }
  }
  return Z;
}

StateBlockMatrix solve_stein(const SteinPrecomputation& pc, const StateBlockMatrix& V) {
  return StateBlockMatrix(solve_stein(pc, V.mat()));
}

StateBlockMatrix solve_stein_transpose(const SteinPrecomputation& pc, const StateBlockMatrix& V) {
  return StateBlockMatrix(solve_stein_transpose(pc, V.mat()));
}

MhatStrategy MhatStrategy::parse(const std::string& text) {
  MhatStrategy st;
  if (text == "sym_first") {
    st.kind = Kind::sym_first;
  } else if (text == "sym_last") {
    st.kind = Kind::sym_last;
  } else if (text.rfind("sym_index:", 0) == 0) {
    st.kind = Kind::sym_index;
    try {
      st.index = std::stol(text.substr(10));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad Mhat strategy index in '" + text + "'");
    }
    if (st.index < 1) throw std::invalid_argument("Mhat strategy index is 1-based");
  } else if (text == "karcher") {
    st.kind = Kind::karcher;
  } else if (text == "min_norm") {
    st.kind = Kind::min_norm_heuristic;
  } else if (text == "exact") {
    st.kind = Kind::exact_when_constant;
  } else {
    throw std::invalid_argument("unknown Mhat strategy '" + text + "'");
  }
  return st;
}

std::string MhatStrategy::name() const {
  switch (kind) {
    case Kind::sym_first: return "sym_first";
    case Kind::sym_last: return "sym_last";
    case Kind::sym_index: return "sym_index:" + std::to_string(index);
    case Kind::karcher: return "karcher";
    case Kind::min_norm_heuristic: return "min_norm";
    case Kind::exact_when_constant: return "exact";
  }
  return "?";
}

Matrix symmetric_part(const Matrix& M) { return 0.5 * (M + M.transpose()); }

namespace {

struct SymFunctions {
  Matrix sqrt, inv_sqrt;
};

SymFunctions sqrt_pair(const Matrix& X) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(X);
  const Vector& d = es.eigenvalues();
  if (d.minCoeff() <= 0.0) throw NumericalError("karcher_mean: iterate lost positive definiteness");
  const Matrix& Vm = es.eigenvectors();
  return {Vm * d.cwiseSqrt().asDiagonal() * Vm.transpose(),
          Vm * d.cwiseSqrt().cwiseInverse().asDiagonal() * Vm.transpose()};
}

Matrix sym_log(const Matrix& X) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric_part(X));
  if (es.eigenvalues().minCoeff() <= 0.0) throw NumericalError("karcher_mean: log of non-SPD matrix");
  return es.eigenvectors() * es.eigenvalues().array().log().matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

Matrix sym_exp(const Matrix& X) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric_part(X));
  return es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace

Matrix karcher_mean(const std::vector<Matrix>& mats, const KarcherOptions& opt) {
  if (mats.empty()) throw std::invalid_argument("karcher_mean: empty input");
  for (const auto& A : mats) {
    if (A.rows() != mats.front().rows() || A.cols() != mats.front().rows())
      throw DimensionError("karcher_mean: inputs must be square and conforming");
    spd_factor(symmetric_part(A), "karcher_mean input");
  }
  if (mats.size() == 1) return mats.front();
  Matrix X = Matrix::Zero(mats.front().rows(), mats.front().cols());
  for (const auto& A : mats) X += A;
  X /= static_cast<double>(mats.size());
  for (int it = 0; it < opt.max_iter; ++it) {
    const SymFunctions sf = sqrt_pair(X);
    Matrix grad = Matrix::Zero(X.rows(), X.cols());
    for (const auto& A : mats) grad += sym_log(sf.inv_sqrt * A * sf.inv_sqrt);
    grad /= static_cast<double>(mats.size());
    if (grad.norm() <= opt.tol) return X;
    X = symmetric_part(sf.sqrt * sym_exp(opt.step * grad) * sf.sqrt);
  }
  throw NumericalError("karcher_mean: no convergence within max_iter");
}

Matrix select_mhat(const std::vector<Matrix>& models, const MhatStrategy& strategy) {
  if (models.empty()) throw std::invalid_argument("select_mhat: empty model list");
  using K = MhatStrategy::Kind;
  switch (strategy.kind) {
    case K::sym_first: return symmetric_part(models.front());
    case K::sym_last: return symmetric_part(models.back());
    case K::sym_index:
      if (strategy.index < 1 || strategy.index > static_cast<Index>(models.size()))
        throw std::out_of_range("select_mhat: sym_index out of range");
      return symmetric_part(models[static_cast<std::size_t>(strategy.index - 1)]);
    case K::karcher: {
      std::vector<Matrix> sym;
      sym.reserve(models.size());
      for (const auto& M : models) sym.push_back(symmetric_part(M));
      return karcher_mean(sym);
    }
    case K::min_norm_heuristic: {
      std::vector<double> norms;
      for (const auto& M : models) norms.push_back(Eigen::BDCSVD<Matrix>(M).singularValues()(0));
      const double best = *std::min_element(norms.begin(), norms.end());
      std::size_t pick = 0;
      double pick_score = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < models.size(); ++i) {
        if (norms[i] > best * (1.0 + 1e-12) + 1e-300) continue;
        double score = 0.0;
        for (const auto& Mj : models) {
          const Matrix Dm = models[i] - Mj;
          score += lambda_max_sym(Dm * Dm.transpose());
        }
        if (score < pick_score) {
          pick_score = score;
          pick = i;
        }
      }
      return models[pick];
    }
    case K::exact_when_constant: return models.front();
  }
  throw std::logic_error("select_mhat: bad kind");
}

double stein_rho(Index N, double growth, double max_defect) {
  const double Nd = static_cast<double>(N);
  const double g = std::abs(growth - 1.0) <= 1e-12 ? Nd : (1.0 - std::pow(growth, Nd)) / (1.0 - growth);
  return g * max_defect;
}

double stein_bound_value(Index N, double growth, double max_defect) {
  const double rho = stein_rho(N, growth, max_defect);
  return 1.0 + 0.5 * static_cast<double>(N) * (rho + std::sqrt(rho * rho + 4.0 * rho));
}

BoundReport stein_bound(const std::vector<Matrix>& models, const Matrix& mhat) {
  if (models.empty()) throw std::invalid_argument("stein_bound: empty model list");
  BoundReport rep;
  rep.growth = std::max(0.0, lambda_max_sym(mhat.transpose() * mhat));
  rep.mhat_norm = std::sqrt(rep.growth);
  for (const auto& M : models) {
    const Matrix Dm = mhat - M;
    rep.max_D = std::max(rep.max_D, lambda_max_sym(Dm.transpose() * Dm));
  }
  rep.max_D = std::max(0.0, rep.max_D);
  const Index N = static_cast<Index>(models.size());
  rep.rho_N = stein_rho(N, rep.growth, rep.max_D);
  rep.upper_bound = stein_bound_value(N, rep.growth, rep.max_D);
  return rep;
}

}  // namespace stein4dvar
