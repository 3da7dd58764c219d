#include "stein4dvar/krylov.hpp"

namespace stein4dvar {

SaddleTriple matgmres(const LinearOp<SaddleTriple>& A, const PrecondOp<SaddleTriple>& P, const SaddleTriple& rhs,
                      const SolveConfig& cfg, SolveReport& rep, const BasisObserver<SaddleTriple>& observer) {
  if (cfg.parity_optimization && rhs.x.norm() != 0.0)
    throw std::invalid_argument("matgmres: parity optimization needs a zero third rhs block");
  return gmres<SaddleTriple>(A, P, rhs, cfg, rep, observer);
}

StateBlockMatrix matcg(const LinearOp<StateBlockMatrix>& S, const LinearOp<StateBlockMatrix>& P,
                       const StateBlockMatrix& rhs, const SolveConfig& cfg, SolveReport& rep) {
  return cg<StateBlockMatrix>(S, P, rhs, cfg, rep);
}

Matrix inner_matcg(const LinearOp<Matrix>& action, const Matrix& rhs, double tol, int max_iter, int* iterations) {
  SolveConfig cfg;
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  cfg.record_history = false;
  SolveReport rep;
  Matrix x = cg<Matrix>(action, LinearOp<Matrix>{}, rhs, cfg, rep);
  if (iterations) *iterations = rep.iterations;
  if (!rep.converged) {
    std::ostringstream os;
    os << "inner CG did not converge in " << rep.iterations << " iterations (relative residual "
       << rep.residual_history.back() << ")";
    throw ConvergenceError(os.str(), rep.iterations, rep.residual_history.back());
  }
  return x;
}

Vector vec_gmres(const LinearOp<Vector>& A, const LinearOp<Vector>& P, const Vector& rhs, const SolveConfig& cfg,
                 SolveReport& rep) {
  PrecondOp<Vector> prec = [&P](const Vector& v, BlockHint) { return P ? P(v) : v; };
  SolveConfig c = cfg;
  c.parity_optimization = false;
  return gmres<Vector>(A, prec, rhs, c, rep);
}

Vector vec_cg(const LinearOp<Vector>& S, const LinearOp<Vector>& P, const Vector& rhs, const SolveConfig& cfg,
              SolveReport& rep) {
  return cg<Vector>(S, P, rhs, cfg, rep);
}

}  // namespace stein4dvar
