#include "stein4dvar/core.hpp"

#include <sstream>

namespace stein4dvar {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << what << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
       << b.cols();
    throw DimensionError(os.str());
  }
}

Vector SaddleTriple::vec() const {
  Vector v(theta.mat().size() + lambda.mat().size() + x.mat().size());
  v << theta.vec(), lambda.vec(), x.vec();
  return v;
}

SaddleTriple SaddleTriple::from_vec(const Vector& v, Index s, Index p, Index n) {
  if (v.size() != (2 * s + p) * n) throw DimensionError("SaddleTriple::from_vec: size mismatch");
  return {StateBlockMatrix::from_vec(v.segment(0, s * n), s, n),
          ObsBlockMatrix::from_vec(v.segment(s * n, p * n), p, n),
          StateBlockMatrix::from_vec(v.segment((s + p) * n, s * n), s, n)};
}

double triple_inner(const SaddleTriple& u, const SaddleTriple& v) { return u.dot(v); }

Eigen::LLT<Matrix> spd_factor(const Matrix& A, const std::string& name) {
  if (A.rows() != A.cols()) throw DimensionError(name + " is not square");
  if ((A - A.transpose()).norm() > 1e-10 * std::max(1.0, A.norm()))
    throw FactorizationError(name + " is not symmetric");
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) throw FactorizationError(name + " is not positive definite");
  return llt;
}

SystemData::SystemData(Matrix B, Matrix Q, Matrix R, Matrix H, std::vector<Matrix> models,
                       StateBlockMatrix b, ObsBlockMatrix d)
    : B_(std::move(B)),
      Q_(std::move(Q)),
      R_(std::move(R)),
      H_(std::move(H)),
      models_(std::move(models)),
      b_(std::move(b)),
      d_(std::move(d)) {
  const Index s = B_.rows();
  const Index p = R_.rows();
  if (models_.empty()) throw DimensionError("SystemData: need at least one model matrix");
  if (Q_.rows() != s || Q_.cols() != s) throw DimensionError("SystemData: Q must be s x s");
  if (H_.rows() != p || H_.cols() != s) throw DimensionError("SystemData: H must be p x s");
  for (const auto& M : models_)
    if (M.rows() != s || M.cols() != s) throw DimensionError("SystemData: M_i must be s x s");
  const Index n = n_times();
  if (b_.rows() != s || b_.cols() != n) throw DimensionError("SystemData: b must be s x (N+1)");
  if (d_.rows() != p || d_.cols() != n) throw DimensionError("SystemData: d must be p x (N+1)");
  B_llt_ = std::make_shared<const Eigen::LLT<Matrix>>(spd_factor(B_, "B"));
  Q_llt_ = std::make_shared<const Eigen::LLT<Matrix>>(spd_factor(Q_, "Q"));
  R_llt_ = std::make_shared<const Eigen::LLT<Matrix>>(spd_factor(R_, "R"));
}

const Matrix& SystemData::model(Index i) const {
  if (i < 1 || i > n_models()) throw std::out_of_range("SystemData::model: index out of range");
  return models_[static_cast<std::size_t>(i - 1)];
}

bool SystemData::constant_model(double tol) const {
  for (const auto& M : models_)
    if ((M - models_.front()).norm() > tol * std::max(1.0, models_.front().norm())) return false;
  return true;
}

SystemData SystemData::with_rhs(StateBlockMatrix b, ObsBlockMatrix d) const {
  SystemData out = *this;
  require_same_shape(b_.mat(), b.mat(), "with_rhs(b)");
  require_same_shape(d_.mat(), d.mat(), "with_rhs(d)");
  out.b_ = std::move(b);
  out.d_ = std::move(d);
  return out;
}

StateBlockMatrix apply_D(const SystemData& sys, const StateBlockMatrix& Z, bool inverse) {
  const Index s = sys.state_dim(), n = sys.n_times();
  if (Z.rows() != s || Z.cols() != n) throw DimensionError("apply_D: shape mismatch");
  StateBlockMatrix out(s, n);
  if (inverse) {
    out.mat().col(0) = sys.B_factor().solve(Z.mat().col(0));
    if (n > 1) out.mat().rightCols(n - 1) = sys.Q_factor().solve(Z.mat().rightCols(n - 1));
  } else {
    out.mat().col(0).noalias() = sys.B() * Z.mat().col(0);
    if (n > 1) out.mat().rightCols(n - 1).noalias() = sys.Q() * Z.mat().rightCols(n - 1);
  }
  return out;
}

StateBlockMatrix apply_L(const SystemData& sys, const StateBlockMatrix& Z, bool transpose) {
  const Index s = sys.state_dim(), n = sys.n_times();
  if (Z.rows() != s || Z.cols() != n) throw DimensionError("apply_L: shape mismatch");
  StateBlockMatrix out = Z;
  if (!transpose) {
    for (Index i = 1; i < n; ++i) out.mat().col(i).noalias() -= sys.model(i) * Z.mat().col(i - 1);
  } else {
    for (Index i = 0; i + 1 < n; ++i)
      out.mat().col(i).noalias() -= sys.model(i + 1).transpose() * Z.mat().col(i + 1);
  }
  return out;
}

Matrix apply_H_chain(const SystemData& sys, const Matrix& Z, HMode mode) {
  const Index s = sys.state_dim(), p = sys.obs_dim();
  switch (mode) {
    case HMode::H:
      if (Z.rows() != s) throw DimensionError("apply_H_chain(H): expected s rows");
      return sys.H() * Z;
    case HMode::Ht:
      if (Z.rows() != p) throw DimensionError("apply_H_chain(Ht): expected p rows");
      return sys.H().transpose() * Z;
    case HMode::Rinv:
      if (Z.rows() != p) throw DimensionError("apply_H_chain(Rinv): expected p rows");
      return sys.R_factor().solve(Z);
    case HMode::HtRinvH:
      if (Z.rows() != s) throw DimensionError("apply_H_chain(HtRinvH): expected s rows");
      return sys.H().transpose() * sys.R_factor().solve(sys.H() * Z);
  }
  throw std::logic_error("apply_H_chain: bad mode");
}

ObsBlockMatrix apply_H(const SystemData& sys, const StateBlockMatrix& Z) {
  return ObsBlockMatrix(apply_H_chain(sys, Z.mat(), HMode::H));
}

StateBlockMatrix apply_Ht(const SystemData& sys, const ObsBlockMatrix& Y) {
  return StateBlockMatrix(apply_H_chain(sys, Y.mat(), HMode::Ht));
}

ObsBlockMatrix apply_R(const SystemData& sys, const ObsBlockMatrix& Y) {
  if (Y.rows() != sys.obs_dim()) throw DimensionError("apply_R: expected p rows");
  return ObsBlockMatrix(sys.R() * Y.mat());
}

ObsBlockMatrix apply_Rinv(const SystemData& sys, const ObsBlockMatrix& Y) {
  return ObsBlockMatrix(apply_H_chain(sys, Y.mat(), HMode::Rinv));
}

StateBlockMatrix apply_HtRinvH(const SystemData& sys, const StateBlockMatrix& Z) {
  return StateBlockMatrix(apply_H_chain(sys, Z.mat(), HMode::HtRinvH));
}

SaddleTriple apply_saddle(const SystemData& sys, const SaddleTriple& v) {
  SaddleTriple out;
  out.theta = apply_D(sys, v.theta) + apply_L(sys, v.x);
  out.lambda = apply_R(sys, v.lambda) + apply_H(sys, v.x);
  out.x = apply_L(sys, v.theta, true) + apply_Ht(sys, v.lambda);
  return out;
}

StateBlockMatrix apply_hessian(const SystemData& sys, const StateBlockMatrix& Z) {
  StateBlockMatrix out = apply_L(sys, apply_D(sys, apply_L(sys, Z), true), true);
  out += apply_HtRinvH(sys, Z);
  return out;
}

SaddleTriple saddle_rhs(const SystemData& sys) {
  return {sys.b(), sys.d(), StateBlockMatrix(sys.state_dim(), sys.n_times())};
}

StateBlockMatrix hessian_rhs(const SystemData& sys) {
  StateBlockMatrix out = apply_L(sys, apply_D(sys, sys.b(), true), true);
  out += apply_Ht(sys, apply_Rinv(sys, sys.d()));
  return out;
}

Matrix apply_stein_operator(const Matrix& mhat, const Matrix& Z, bool transpose) {
  if (mhat.rows() != mhat.cols() || mhat.cols() != Z.rows())
    throw DimensionError("apply_stein_operator: shape mismatch");
  const Index n = Z.cols();
  Matrix out = Z;
  if (!transpose) {
    // (Z Sigma^T)_{:,j} = Z_{:,j-1}
    if (n > 1) out.rightCols(n - 1).noalias() -= mhat * Z.leftCols(n - 1);
  } else {
    // (Z Sigma)_{:,j} = Z_{:,j+1}
    if (n > 1) out.leftCols(n - 1).noalias() -= mhat.transpose() * Z.rightCols(n - 1);
  }
  return out;
}

}  // namespace stein4dvar
