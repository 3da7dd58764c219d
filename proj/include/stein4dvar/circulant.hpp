#pragma once

#include "stein4dvar/core.hpp"

namespace stein4dvar {

namespace detail {
struct FftPlans;
}

// The down-shift Sigma = C - e1 e_n^T, with C the circulant whose first column
// is e2. F is the unnormalised DFT matrix F_jk = w^{jk}, w = exp(-2 pi i / n),
// so C = F^-1 diag(pi) F with pi = F C e1 = (1, w, w^2, ...).
// F is symmetric: F^T = F and F^-T = F^-1.
class CirculantShift {
 public:
  explicit CirculantShift(Index n);

  Index size() const { return n_; }
  const CVector& pi() const { return pi_; }

  // X * F: forward DFT of every row.
  CMatrix right_mul_F(const CMatrix& X) const;
  // X * F^-1: inverse DFT of every row (scaled by 1/n).
  CMatrix right_mul_Finv(const CMatrix& X) const;

  // F e1 = ones, F^-1 e_n = (w^j / n)_j.
  CVector F_e1() const;
  CVector Finv_en() const;

  // Dense matrices, for tests and small diagnostics only.
  CMatrix dense_F() const;
  Matrix dense_C() const;
  Matrix dense_Sigma() const;

 private:
  Index n_;
  CVector pi_;
  std::shared_ptr<const detail::FftPlans> plans_;
};

Matrix shift_matrix(Index n);

}  // namespace stein4dvar
