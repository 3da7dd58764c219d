#pragma once

// Test-side reference constructions. Everything here is assembled from
// explicit Kronecker products and never calls the library operators.

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

inline Matrix down_shift(Index n) {
  Matrix S = Matrix::Zero(n, n);
  for (Index i = 1; i < n; ++i) S(i, i - 1) = 1.0;
  return S;
}

inline Matrix unit_outer(Index n, Index i, Index j) {
  Matrix E = Matrix::Zero(n, n);
  E(i, j) = 1.0;
  return E;
}

// e1 e1^T (x) B + (I - e1 e1^T) (x) Q
inline Matrix dense_D(const Matrix& B, const Matrix& Q, Index n) {
  const Matrix E = unit_outer(n, 0, 0);
  return kron(E, B) + kron(Matrix::Identity(n, n) - E, Q);
}

// I - sum_i (e_{i+1} e_i^T) (x) M_i ; chain cut where keep[i] is false.
inline Matrix dense_L(const std::vector<Matrix>& models, const std::vector<bool>& keep = {}) {
  const Index s = models.front().rows();
  const Index n = static_cast<Index>(models.size()) + 1;
  Matrix L = Matrix::Identity(s * n, s * n);
  for (Index i = 1; i < n; ++i) {
    if (!keep.empty() && !keep[static_cast<std::size_t>(i - 1)]) continue;
    L -= kron(unit_outer(n, i, i - 1), models[static_cast<std::size_t>(i - 1)]);
  }
  return L;
}

inline Matrix dense_stein(const Matrix& mhat, Index n) {
  const Index s = mhat.rows();
  return Matrix::Identity(s * n, s * n) - kron(down_shift(n), mhat);
}

inline Matrix dense_A(const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& H,
                      const std::vector<Matrix>& models) {
  const Index s = B.rows(), p = R.rows();
  const Index n = static_cast<Index>(models.size()) + 1;
  const Matrix I = Matrix::Identity(n, n);
  const Matrix D = dense_D(B, Q, n), L = dense_L(models), Rb = kron(I, R), Hb = kron(I, H);
  const Index ns = s * n, np = p * n;
  Matrix A = Matrix::Zero(2 * ns + np, 2 * ns + np);
  A.block(0, 0, ns, ns) = D;
  A.block(0, ns + np, ns, ns) = L;
  A.block(ns, ns, np, np) = Rb;
  A.block(ns, ns + np, np, ns) = Hb;
  A.block(ns + np, 0, ns, ns) = L.transpose();
  A.block(ns + np, ns, ns, np) = Hb.transpose();
  return A;
}

inline Matrix dense_S(const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& H,
                      const std::vector<Matrix>& models) {
  const Index n = static_cast<Index>(models.size()) + 1;
  const Matrix I = Matrix::Identity(n, n);
  const Matrix D = dense_D(B, Q, n), L = dense_L(models), Rb = kron(I, R), Hb = kron(I, H);
  return L.transpose() * D.inverse() * L + Hb.transpose() * Rb.inverse() * Hb;
}

inline Matrix vec_to_block(const Vector& v, Index rows, Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline Vector block_to_vec(const Matrix& M) { return Eigen::Map<const Vector>(M.data(), M.size()); }

inline Matrix random_matrix(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix M(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) M(i, j) = nd(rng);
  return M;
}

// Random matrix scaled to the given spectral norm.
inline Matrix random_with_norm(Index s, double norm, std::mt19937_64& rng) {
  Matrix M = random_matrix(s, s, rng);
  const double sn = Eigen::JacobiSVD<Matrix>(M).singularValues()(0);
  return M * (norm / sn);
}

// SPD matrix with eigenvalues spread log-uniformly in [1, cond].
inline Matrix random_spd(Index s, double cond, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(s, s, rng));
  const Matrix Qm = qr.householderQ();
  Vector d(s);
  for (Index i = 0; i < s; ++i)
    d(i) = s > 1 ? std::pow(cond, static_cast<double>(i) / static_cast<double>(s - 1)) : 1.0;
  Matrix A = Qm * d.asDiagonal() * Qm.transpose();
  return 0.5 * (A + A.transpose());
}

inline Matrix random_symmetric_with_norm(Index s, double norm, std::mt19937_64& rng) {
  Matrix M = random_matrix(s, s, rng);
  M = (0.5 * (M + M.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  const double sn = es.eigenvalues().cwiseAbs().maxCoeff();
  return M * (norm / sn);
}

}  // namespace oracle
