#include "stein4dvar/circulant.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <numbers>

namespace stein4dvar {

namespace detail {

// fftw planning is not thread safe; execution with the new-array interface is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftPlans {
  explicit FftPlans(int n) : n_(n) {}
  ~FftPlans() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    for (auto& [rows, p] : plans_) {
      fftw_destroy_plan(p.first);
      fftw_destroy_plan(p.second);
    }
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  // Forward and backward plans transforming every row of a column-major
  // rows x n matrix in place of a separate output.
  std::pair<fftw_plan, fftw_plan> get(int rows) const {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    auto it = plans_.find(rows);
    if (it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(static_cast<std::size_t>(rows) * static_cast<std::size_t>(n_));
    auto* out = fftw_alloc_complex(static_cast<std::size_t>(rows) * static_cast<std::size_t>(n_));
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    int n = n_;
    fftw_plan f = fftw_plan_many_dft(1, &n, rows, in, nullptr, rows, 1, out, nullptr, rows, 1, FFTW_FORWARD, flags);
    fftw_plan b = fftw_plan_many_dft(1, &n, rows, in, nullptr, rows, 1, out, nullptr, rows, 1, FFTW_BACKWARD, flags);
    fftw_free(in);
    fftw_free(out);
    if (!f || !b) throw std::runtime_error("fftw planning failed");
    return plans_.emplace(rows, std::make_pair(f, b)).first->second;
  }

 private:
  int n_;
  mutable std::map<int, std::pair<fftw_plan, fftw_plan>> plans_;
};

}  // namespace detail

namespace {

// Transform each row of X.
CMatrix rowwise(const CMatrix& X, const detail::FftPlans& plans, bool forward, Index n) {
  if (X.cols() != n) throw DimensionError("circulant: column count must equal n");
  CMatrix Y(X.rows(), n);
  if (X.rows() == 0) return Y;
  const auto [f, b] = plans.get(static_cast<int>(X.rows()));
  fftw_execute_dft(forward ? f : b, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(X.data())),
                   reinterpret_cast<fftw_complex*>(Y.data()));
  return Y;
}

}  // namespace

CirculantShift::CirculantShift(Index n) : n_(n) {
  if (n < 2) throw DimensionError("CirculantShift: n must be at least 2");
  plans_ = std::make_shared<const detail::FftPlans>(static_cast<int>(n));
  CMatrix e2 = CMatrix::Zero(1, n);
  e2(0, 1) = 1.0;
  // Row-wise DFT of e2^T equals (F e2)^T since F is symmetric.
  pi_ = right_mul_F(e2).row(0).transpose();
}

CMatrix CirculantShift::right_mul_F(const CMatrix& X) const {
  return rowwise(X, *plans_, true, n_);
}

CMatrix CirculantShift::right_mul_Finv(const CMatrix& X) const {
  return rowwise(X, *plans_, false, n_) / static_cast<double>(n_);
}

CVector CirculantShift::F_e1() const { return CVector::Ones(n_); }

CVector CirculantShift::Finv_en() const {
  CVector f(n_);
  const double theta = -2.0 * std::numbers::pi / static_cast<double>(n_);
  // (F^-1)_{j,n-1} = w^{-j(n-1)} / n = w^j / n
  for (Index j = 0; j < n_; ++j)
    f(j) = std::polar(1.0, theta * static_cast<double>(j)) / static_cast<double>(n_);
  return f;
}

CMatrix CirculantShift::dense_F() const {
  CMatrix F(n_, n_);
  const double theta = -2.0 * std::numbers::pi / static_cast<double>(n_);
  for (Index j = 0; j < n_; ++j)
    for (Index k = 0; k < n_; ++k)
      F(j, k) = std::polar(1.0, theta * static_cast<double>((j * k) % n_));
  return F;
}

Matrix CirculantShift::dense_C() const {
  Matrix C = Matrix::Zero(n_, n_);
  for (Index j = 0; j < n_; ++j) C((j + 1) % n_, j) = 1.0;
  return C;
}

Matrix CirculantShift::dense_Sigma() const { return shift_matrix(n_); }

Matrix shift_matrix(Index n) {
  Matrix S = Matrix::Zero(n, n);
  for (Index j = 0; j + 1 < n; ++j) S(j + 1, j) = 1.0;
  return S;
}

}  // namespace stein4dvar
