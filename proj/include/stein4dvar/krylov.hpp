#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <type_traits>
#include <vector>

#include "stein4dvar/core.hpp"

namespace stein4dvar {

struct SolveConfig {
  double tol = 1e-8;
  int max_iter = 1000;
  bool flexible = false;
  bool record_history = true;
  // Alternating zero-block basis for P_D with a (b, d, 0) right-hand side.
  bool parity_optimization = false;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;  // relative residuals, entry 0 is the initial one
  double wall_time = 0.0;
  std::vector<long> inner_iterations;  // per preconditioner application, variable preconditioners only
  bool converged = false;
  bool breakdown = false;
  long precond_applications = 0;
  std::string message;
};

// Linear-space primitives shared by the Krylov templates.
inline double kdot(const Vector& a, const Vector& b) { return a.dot(b); }
inline double kdot(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "kdot");
  return (a.array() * b.array()).sum();
}
inline double kdot(const StateBlockMatrix& a, const StateBlockMatrix& b) { return a.dot(b); }
inline double kdot(const SaddleTriple& a, const SaddleTriple& b) { return a.dot(b); }

inline void kaxpy(Vector& y, double a, const Vector& x) { y.noalias() += a * x; }
inline void kaxpy(Matrix& y, double a, const Matrix& x) { y.noalias() += a * x; }
inline void kaxpy(StateBlockMatrix& y, double a, const StateBlockMatrix& x) { y.axpy(a, x); }
inline void kaxpy(SaddleTriple& y, double a, const SaddleTriple& x) { y.axpy(a, x); }

inline void kscale(Vector& x, double a) { x *= a; }
inline void kscale(Matrix& x, double a) { x *= a; }
inline void kscale(StateBlockMatrix& x, double a) { x *= a; }
inline void kscale(SaddleTriple& x, double a) { x *= a; }

inline Vector kzeros(const Vector& x) { return Vector::Zero(x.size()); }
inline Matrix kzeros(const Matrix& x) { return Matrix::Zero(x.rows(), x.cols()); }
inline StateBlockMatrix kzeros(const StateBlockMatrix& x) { return x.zeros_like(); }
inline SaddleTriple kzeros(const SaddleTriple& x) { return x.zeros_like(); }

template <class V>
using LinearOp = std::function<V(const V&)>;
template <class V>
using PrecondOp = std::function<V(const V&, BlockHint)>;
template <class V>
using BasisObserver = std::function<void(int, const V&)>;

namespace detail {

inline double top_dot(const SaddleTriple& a, const SaddleTriple& b) {
  return a.theta.dot(b.theta) + a.lambda.dot(b.lambda);
}
inline void top_axpy(SaddleTriple& y, double a, const SaddleTriple& x) {
  y.theta.axpy(a, x.theta);
  y.lambda.axpy(a, x.lambda);
}

class Stopwatch {
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace detail

// Right-preconditioned GMRES from a zero initial guess. Two sweeps of modified
// Gram-Schmidt, Givens rotations, no restarts. Basis vectors are numbered from 1.
template <class V>
V gmres(const LinearOp<V>& A, const PrecondOp<V>& P, const V& b, const SolveConfig& cfg, SolveReport& rep,
        const BasisObserver<V>& observer = {}) {
  detail::Stopwatch clock;
  rep = SolveReport{};
  constexpr bool is_saddle = std::is_same_v<V, SaddleTriple>;
  const bool parity = is_saddle && cfg.parity_optimization;
  const double beta = std::sqrt(kdot(b, b));
  V x = kzeros(b);
  rep.residual_history.push_back(beta > 0.0 ? 1.0 : 0.0);
  if (beta == 0.0) {
    rep.converged = true;
    rep.wall_time = clock.seconds();
    return x;
  }

  std::vector<V> basis, zbasis;
  basis.push_back(b);
  kscale(basis.back(), 1.0 / beta);
  if (observer) observer(1, basis.back());
  std::vector<std::vector<double>> Hcols;  // column j has j + 2 entries
  std::vector<double> cs, sn, g{beta};
  int m = 0;

  for (int j = 0; j < cfg.max_iter; ++j) {
    const bool odd = (j % 2 == 0);  // basis vector j + 1 is odd
    BlockHint hint = BlockHint::none;
    if (parity) hint = odd ? BlockHint::third_zero : BlockHint::first_two_zero;
    V z = P(basis[static_cast<std::size_t>(j)], hint);
    ++rep.precond_applications;
    V w = A(z);
    // With the parity basis the preconditioned vectors are kept so that the
    // solution needs no further preconditioner application.
    if (cfg.flexible || parity) zbasis.push_back(std::move(z));

    std::vector<double> h(static_cast<std::size_t>(j) + 2, 0.0);
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) {
        const V& vi = basis[static_cast<std::size_t>(i)];
        double hij;
        if constexpr (is_saddle) {
          if (parity) {
            const bool i_odd = (i % 2 == 0);
            if (i_odd == odd && i != j) continue;
            if (i_odd) {
              hij = detail::top_dot(vi, w);
              detail::top_axpy(w, -hij, vi);
            } else {
              hij = vi.x.dot(w.x);
              w.x.axpy(-hij, vi.x);
            }
            h[static_cast<std::size_t>(i)] += hij;
            continue;
          }
        }
        hij = kdot(vi, w);
        kaxpy(w, -hij, vi);
        h[static_cast<std::size_t>(i)] += hij;
      }
    }
    if constexpr (is_saddle) {
      if (parity) {
        if (odd) {
          w.theta.mat().setZero();
          w.lambda.mat().setZero();
        } else {
          w.x.mat().setZero();
        }
      }
    }
    const double hnext = std::sqrt(kdot(w, w));
    h[static_cast<std::size_t>(j) + 1] = hnext;

    for (int i = 0; i < j; ++i) {
      const double a = h[static_cast<std::size_t>(i)], c = h[static_cast<std::size_t>(i) + 1];
      h[static_cast<std::size_t>(i)] = cs[static_cast<std::size_t>(i)] * a + sn[static_cast<std::size_t>(i)] * c;
      h[static_cast<std::size_t>(i) + 1] = -sn[static_cast<std::size_t>(i)] * a + cs[static_cast<std::size_t>(i)] * c;
    }
    const double a = h[static_cast<std::size_t>(j)], c = h[static_cast<std::size_t>(j) + 1];
    const double r = std::hypot(a, c);
    const double cj = r > 0.0 ? a / r : 1.0, sj = r > 0.0 ? c / r : 0.0;
    cs.push_back(cj);
    sn.push_back(sj);
    h[static_cast<std::size_t>(j)] = r;
    h[static_cast<std::size_t>(j) + 1] = 0.0;
    g.push_back(-sj * g[static_cast<std::size_t>(j)]);
    g[static_cast<std::size_t>(j)] *= cj;
    Hcols.push_back(std::move(h));
    m = j + 1;

    const double res = std::abs(g[static_cast<std::size_t>(j) + 1]) / beta;
    if (cfg.record_history) rep.residual_history.push_back(res);
    if (res <= cfg.tol) {
      rep.converged = true;
      break;
    }
    if (hnext <= 1e-14 * beta) {
      rep.breakdown = true;
      rep.converged = true;
      rep.message = "lucky breakdown";
      break;
    }
    kscale(w, 1.0 / hnext);
    basis.push_back(std::move(w));
    if (observer) observer(j + 2, basis.back());
  }

  // Back substitution on the rotated Hessenberg matrix.
  std::vector<double> y(static_cast<std::size_t>(m), 0.0);
  for (int i = m - 1; i >= 0; --i) {
    double acc = g[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < m; ++k)
      acc -= Hcols[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(k)];
    y[static_cast<std::size_t>(i)] = acc / Hcols[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  }
  if (cfg.flexible || parity) {
    for (int i = 0; i < m; ++i) kaxpy(x, y[static_cast<std::size_t>(i)], zbasis[static_cast<std::size_t>(i)]);
  } else {
    V vy = kzeros(b);
    for (int i = 0; i < m; ++i) kaxpy(vy, y[static_cast<std::size_t>(i)], basis[static_cast<std::size_t>(i)]);
    x = P(vy, BlockHint::none);
    ++rep.precond_applications;
  }
  rep.iterations = m;
  if (!cfg.record_history && m > 0) rep.residual_history.push_back(std::abs(g[static_cast<std::size_t>(m)]) / beta);
  if (!rep.converged) rep.message = "maximum number of iterations reached";
  rep.wall_time = clock.seconds();
  return x;
}

// Preconditioned CG from a zero initial guess; the flexible variant uses the
// Polak-Ribiere beta. Throws NumericalError if p^T S p <= 0.
template <class V>
V cg(const LinearOp<V>& S, const LinearOp<V>& P, const V& b, const SolveConfig& cfg, SolveReport& rep) {
  detail::Stopwatch clock;
  rep = SolveReport{};
  V x = kzeros(b);
  const double r0 = std::sqrt(kdot(b, b));
  rep.residual_history.push_back(r0 > 0.0 ? 1.0 : 0.0);
  if (r0 == 0.0) {
    rep.converged = true;
    rep.wall_time = clock.seconds();
    return x;
  }
  V r = b;
  V z = P ? P(r) : r;
  if (P) ++rep.precond_applications;
  V p = z;
  double rz = kdot(r, z);
  int it = 0;
  for (; it < cfg.max_iter;) {
    V q = S(p);
    const double pq = kdot(p, q);
    if (!(pq > 0.0)) {
      std::ostringstream os;
      os << "cg: operator is not positive definite (p^T S p = " << pq << ")";
      throw NumericalError(os.str());
    }
    const double alpha = rz / pq;
    kaxpy(x, alpha, p);
    V r_old;
    if (cfg.flexible) r_old = r;
    kaxpy(r, -alpha, q);
    ++it;
    const double res = std::sqrt(kdot(r, r)) / r0;
    if (cfg.record_history) rep.residual_history.push_back(res);
    if (res <= cfg.tol) {
      rep.converged = true;
      break;
    }
    V znew = P ? P(r) : r;
    if (P) ++rep.precond_applications;
    const double rz_new = kdot(r, znew);
    double beta_cg;
    if (cfg.flexible) {
      beta_cg = (rz_new - kdot(r_old, znew)) / rz;
    } else {
      beta_cg = rz_new / rz;
    }
    kscale(p, beta_cg);
    kaxpy(p, 1.0, znew);
    rz = rz_new;
  }
  rep.iterations = it;
  if (!cfg.record_history) rep.residual_history.push_back(std::sqrt(kdot(r, r)) / r0);
  if (!rep.converged) rep.message = "maximum number of iterations reached";
  rep.wall_time = clock.seconds();
  return x;
}

// Matrix-oriented GMRES on the saddle-point system.
SaddleTriple matgmres(const LinearOp<SaddleTriple>& A, const PrecondOp<SaddleTriple>& P, const SaddleTriple& rhs,
                      const SolveConfig& cfg, SolveReport& rep, const BasisObserver<SaddleTriple>& observer = {});

// Matrix-oriented CG on the Hessian system.
StateBlockMatrix matcg(const LinearOp<StateBlockMatrix>& S, const LinearOp<StateBlockMatrix>& P,
                       const StateBlockMatrix& rhs, const SolveConfig& cfg, SolveReport& rep);

// Unpreconditioned CG in the space of r x (N+1) matrices. Throws
// ConvergenceError if tol is not reached within max_iter.
Matrix inner_matcg(const LinearOp<Matrix>& action, const Matrix& rhs, double tol, int max_iter,
                   int* iterations = nullptr);

Vector vec_gmres(const LinearOp<Vector>& A, const LinearOp<Vector>& P, const Vector& rhs, const SolveConfig& cfg,
                 SolveReport& rep);
Vector vec_cg(const LinearOp<Vector>& S, const LinearOp<Vector>& P, const Vector& rhs, const SolveConfig& cfg,
              SolveReport& rep);

}  // namespace stein4dvar
