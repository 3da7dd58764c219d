#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stein4dvar {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : NumericalError(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

// Known zero blocks of a saddle vector handed to a preconditioner.
enum class BlockHint { none, first_two_zero, third_zero };

void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

// Dense s x (N+1) (or p x (N+1)) block whose column j is the block at
// observation time j. vec() stacks the columns.
template <class Tag>
class BlockMatrix {
 public:
  BlockMatrix() = default;
  BlockMatrix(Index rows, Index cols) : m_(Matrix::Zero(rows, cols)) {}
  explicit BlockMatrix(Matrix m) : m_(std::move(m)) {}

  static BlockMatrix from_vec(const Vector& v, Index rows, Index cols) {
    if (v.size() != rows * cols) throw DimensionError("from_vec: size mismatch");
    return BlockMatrix(Eigen::Map<const Matrix>(v.data(), rows, cols));
  }

  Index rows() const { return m_.rows(); }
  Index cols() const { return m_.cols(); }
  const Matrix& mat() const { return m_; }
  Matrix& mat() { return m_; }

  Vector vec() const { return Eigen::Map<const Vector>(m_.data(), m_.size()); }

  BlockMatrix zeros_like() const { return BlockMatrix(rows(), cols()); }

  double dot(const BlockMatrix& o) const {
    require_same_shape(m_, o.m_, "dot");
    return (m_.array() * o.m_.array()).sum();
  }
  double squared_norm() const { return m_.squaredNorm(); }
  double norm() const { return m_.norm(); }

  BlockMatrix& operator+=(const BlockMatrix& o) {
    require_same_shape(m_, o.m_, "+=");
    m_ += o.m_;
    return *this;
  }
  BlockMatrix& operator-=(const BlockMatrix& o) {
    require_same_shape(m_, o.m_, "-=");
    m_ -= o.m_;
    return *this;
  }
  BlockMatrix& operator*=(double a) {
    m_ *= a;
    return *this;
  }
  // this += a * x
  BlockMatrix& axpy(double a, const BlockMatrix& x) {
    require_same_shape(m_, x.m_, "axpy");
    m_.noalias() += a * x.m_;
    return *this;
  }

  friend BlockMatrix operator+(BlockMatrix a, const BlockMatrix& b) { return a += b; }
  friend BlockMatrix operator-(BlockMatrix a, const BlockMatrix& b) { return a -= b; }
  friend BlockMatrix operator*(double s, BlockMatrix a) { return a *= s; }

 private:
  Matrix m_;
};

struct StateTag {};
struct ObsTag {};
using StateBlockMatrix = BlockMatrix<StateTag>;
using ObsBlockMatrix = BlockMatrix<ObsTag>;

// Block representation of a vector of the saddle-point system: (theta, lambda, x).
struct SaddleTriple {
  StateBlockMatrix theta;
  ObsBlockMatrix lambda;
  StateBlockMatrix x;

  SaddleTriple() = default;
  SaddleTriple(StateBlockMatrix t, ObsBlockMatrix l, StateBlockMatrix xx)
      : theta(std::move(t)), lambda(std::move(l)), x(std::move(xx)) {}
  static SaddleTriple zeros(Index s, Index p, Index n) {
    return {StateBlockMatrix(s, n), ObsBlockMatrix(p, n), StateBlockMatrix(s, n)};
  }

  SaddleTriple zeros_like() const {
    return {theta.zeros_like(), lambda.zeros_like(), x.zeros_like()};
  }
  double dot(const SaddleTriple& o) const {
    return theta.dot(o.theta) + lambda.dot(o.lambda) + x.dot(o.x);
  }
  double squared_norm() const {
    return theta.squared_norm() + lambda.squared_norm() + x.squared_norm();
  }
  double norm() const { return std::sqrt(squared_norm()); }

  SaddleTriple& axpy(double a, const SaddleTriple& o) {
    theta.axpy(a, o.theta);
    lambda.axpy(a, o.lambda);
    x.axpy(a, o.x);
    return *this;
  }
  SaddleTriple& operator*=(double a) {
    theta *= a;
    lambda *= a;
    x *= a;
    return *this;
  }
  SaddleTriple& operator+=(const SaddleTriple& o) { return axpy(1.0, o); }
  SaddleTriple& operator-=(const SaddleTriple& o) { return axpy(-1.0, o); }

  // vec of the stacked triple: [vec(theta); vec(lambda); vec(x)].
  Vector vec() const;
  static SaddleTriple from_vec(const Vector& v, Index s, Index p, Index n);
};

double triple_inner(const SaddleTriple& u, const SaddleTriple& v);

// All data of one linearised weak-constraint problem with Kronecker structure:
// D = e1 e1^T (x) B + (I - e1 e1^T) (x) Q, R-block = I (x) R, H-block = I (x) H,
// and L the block bidiagonal matrix with -M_i on the subdiagonal.
class SystemData {
 public:
  SystemData(Matrix B, Matrix Q, Matrix R, Matrix H, std::vector<Matrix> models,
             StateBlockMatrix b, ObsBlockMatrix d);

  Index state_dim() const { return B_.rows(); }
  Index obs_dim() const { return R_.rows(); }
  Index n_times() const { return static_cast<Index>(models_.size()) + 1; }
  Index n_models() const { return static_cast<Index>(models_.size()); }

  const Matrix& B() const { return B_; }
  const Matrix& Q() const { return Q_; }
  const Matrix& R() const { return R_; }
  const Matrix& H() const { return H_; }
  const std::vector<Matrix>& models() const { return models_; }
  const Matrix& model(Index i) const;  // 1-based, i = 1..N
  const StateBlockMatrix& b() const { return b_; }
  const ObsBlockMatrix& d() const { return d_; }

  const Eigen::LLT<Matrix>& B_factor() const { return *B_llt_; }
  const Eigen::LLT<Matrix>& Q_factor() const { return *Q_llt_; }
  const Eigen::LLT<Matrix>& R_factor() const { return *R_llt_; }

  bool constant_model(double tol = 0.0) const;

  SystemData with_rhs(StateBlockMatrix b, ObsBlockMatrix d) const;

 private:
  Matrix B_, Q_, R_, H_;
  std::vector<Matrix> models_;
  StateBlockMatrix b_;
  ObsBlockMatrix d_;
  std::shared_ptr<const Eigen::LLT<Matrix>> B_llt_, Q_llt_, R_llt_;
};

// Cholesky factorisation with an SPD check. Throws FactorizationError.
Eigen::LLT<Matrix> spd_factor(const Matrix& A, const std::string& name);

StateBlockMatrix apply_D(const SystemData& sys, const StateBlockMatrix& Z, bool inverse = false);

// Untransposed: col 0 = Z_0, col i = Z_i - M_i Z_{i-1}.
// Transposed: col i = Z_i - M_{i+1}^T Z_{i+1}, col N = Z_N.
StateBlockMatrix apply_L(const SystemData& sys, const StateBlockMatrix& Z, bool transpose = false);

enum class HMode { H, Ht, Rinv, HtRinvH };

Matrix apply_H_chain(const SystemData& sys, const Matrix& Z, HMode mode);
ObsBlockMatrix apply_H(const SystemData& sys, const StateBlockMatrix& Z);
StateBlockMatrix apply_Ht(const SystemData& sys, const ObsBlockMatrix& Y);
ObsBlockMatrix apply_R(const SystemData& sys, const ObsBlockMatrix& Y);
ObsBlockMatrix apply_Rinv(const SystemData& sys, const ObsBlockMatrix& Y);
StateBlockMatrix apply_HtRinvH(const SystemData& sys, const StateBlockMatrix& Z);

// Saddle matrix [[D, 0, L], [0, R, H], [L^T, H^T, 0]] applied blockwise.
SaddleTriple apply_saddle(const SystemData& sys, const SaddleTriple& v);

// Hessian S = L^T D^-1 L + H^T R^-1 H.
StateBlockMatrix apply_hessian(const SystemData& sys, const StateBlockMatrix& Z);

// Right-hand sides: (b, d, 0) for the saddle system and the consistent
// reduced rhs L^T D^-1 b + H^T R^-1 d for the Hessian system.
SaddleTriple saddle_rhs(const SystemData& sys);
StateBlockMatrix hessian_rhs(const SystemData& sys);

// Z - Mhat Z Sigma^T (or Z - Mhat^T Z Sigma when transposed); Sigma is the
// (N+1) x (N+1) down-shift.
Matrix apply_stein_operator(const Matrix& mhat, const Matrix& Z, bool transpose = false);

}  // namespace stein4dvar
