#include "stein4dvar/problems.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

namespace stein4dvar {

ProblemFamily parse_family(const std::string& text) {
  if (text == "lorenz96") return ProblemFamily::lorenz96;
  if (text == "heat") return ProblemFamily::heat;
  throw std::invalid_argument("unknown problem family '" + text + "'");
}

std::string family_name(ProblemFamily f) { return f == ProblemFamily::lorenz96 ? "lorenz96" : "heat"; }

void ProblemSpec::validate() const {
  if (p < 1 || p > s) throw std::invalid_argument("problem: need 1 <= p <= s");
  if (N < 1) throw std::invalid_argument("problem: need N >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("problem: dt must be positive");
  if (family == ProblemFamily::heat) {
    if (s < 3) throw std::invalid_argument("problem: heat needs s >= 3");
    if (!(dx > 0.0)) throw std::invalid_argument("problem: dx must be positive");
  } else if (s < 4) {
    throw std::invalid_argument("problem: lorenz96 needs s >= 4");
  }
  for (const CovarianceSpec* c : {&cov_B, &cov_Q, &cov_R})
    if (!(c->L > 0.0) || !(c->sigma > 0.0) || c->nnz < 0 || c->rel_floor < 0.0 || c->rel_floor >= 1.0)
      throw std::invalid_argument("problem: invalid covariance parameters");
}

namespace {
inline Index wrap(Index i, Index s) { return ((i % s) + s) % s; }
}  // namespace

Vector lorenz96_rhs(const Vector& x) {
  const Index s = x.size();
  Vector f(s);
  for (Index i = 0; i < s; ++i)
    f(i) = (x(wrap(i + 1, s)) - x(wrap(i - 2, s))) * x(wrap(i - 1, s)) - x(i) + 8.0;
  return f;
}

Matrix lorenz96_jacobian(const Vector& x) {
  const Index s = x.size();
  Matrix J = Matrix::Zero(s, s);
  for (Index i = 0; i < s; ++i) {
    const Index ip1 = wrap(i + 1, s), im1 = wrap(i - 1, s), im2 = wrap(i - 2, s);
    J(i, ip1) += x(im1);
    J(i, im2) -= x(im1);
    J(i, im1) += x(ip1) - x(im2);
    J(i, i) -= 1.0;
  }
  return J;
}

Vector lorenz96_step(const Vector& x, double dt) {
  const Vector k1 = lorenz96_rhs(x);
  const Vector k2 = lorenz96_rhs(x + 0.5 * dt * k1);
  const Vector k3 = lorenz96_rhs(x + 0.5 * dt * k2);
  const Vector k4 = lorenz96_rhs(x + dt * k3);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Matrix lorenz96_tlm(const Vector& x, double dt) {
  const Index s = x.size();
  const Matrix I = Matrix::Identity(s, s);
  const Vector k1 = lorenz96_rhs(x);
  const Vector x2 = x + 0.5 * dt * k1;
  const Vector k2 = lorenz96_rhs(x2);
  const Vector x3 = x + 0.5 * dt * k2;
  const Vector k3 = lorenz96_rhs(x3);
  const Vector x4 = x + dt * k3;
  const Matrix dk1 = lorenz96_jacobian(x);
  const Matrix dk2 = lorenz96_jacobian(x2) * (I + 0.5 * dt * dk1);
  const Matrix dk3 = lorenz96_jacobian(x3) * (I + 0.5 * dt * dk2);
  const Matrix dk4 = lorenz96_jacobian(x4) * (I + dt * dk3);
  return I + dt / 6.0 * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4);
}

Vector lorenz96_spinup(Index s, Index steps, double dt) {
  Vector x(s);
  for (Index i = 0; i < s; ++i)
    x(i) = 8.0 + 0.01 * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(s));
  for (Index k = 0; k < steps; ++k) x = lorenz96_step(x, dt);
  return x;
}

std::vector<Matrix> lorenz96_models(const Vector& x0, Index N, double dt) {
  std::vector<Matrix> models;
  models.reserve(static_cast<std::size_t>(N));
  Vector x = x0;
  for (Index i = 0; i < N; ++i) {
    models.push_back(lorenz96_tlm(x, dt));
    x = lorenz96_step(x, dt);
  }
  return models;
}

Matrix heat_model(Index s, double dt, double dx) {
  if (s < 3) throw std::invalid_argument("heat_model: s must be at least 3");
  const double r = dt / (dx * dx);
  Matrix M = Matrix::Zero(s, s);
  for (Index i = 1; i + 1 < s; ++i) {
    M(i, i) = 1.0 - 2.0 * r;
    if (i > 1) M(i, i - 1) = r;
    if (i + 2 < s) M(i, i + 1) = r;
  }
  return M;
}

Matrix soar_covariance(Index s, const CovarianceSpec& spec) {
  if (s < 1) throw std::invalid_argument("soar_covariance: s must be positive");
  if (spec.nnz > s) throw std::invalid_argument("soar_covariance: band wider than the matrix");
  const Index half = spec.nnz > 0 ? spec.nnz / 2 : s;
  Matrix C = Matrix::Zero(s, s);
  for (Index i = 0; i < s; ++i) {
    for (Index j = 0; j < s; ++j) {
      const Index k = std::min(std::abs(i - j), s - std::abs(i - j));
      if (k > half) continue;
      const double frac = static_cast<double>(k) / static_cast<double>(s);
      const double d = spec.distance == SoarDistance::chordal ? std::sin(std::numbers::pi * frac) / std::numbers::pi
                                                               : frac;
      const double t = d / spec.L;
      C(i, j) = spec.sigma * spec.sigma * (1.0 + t) * std::exp(-t);
    }
  }
  C = (0.5 * (C + C.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(C, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
  // Smallest diagonal shift with lmin + tau >= rel_floor (lmax + tau) and lmin + tau >= 1e-8.
  double tau = std::max(0.0, 1e-8 - lmin);
  if (spec.rel_floor > 0.0 && spec.rel_floor < 1.0)
    tau = std::max(tau, (spec.rel_floor * lmax - lmin) / (1.0 - spec.rel_floor));
  C.diagonal().array() += tau;
  return C;
}

Matrix build_observation(Index s, Index p) {
  if (p < 1 || p > s) throw std::invalid_argument("build_observation: need 1 <= p <= s");
  Matrix H = Matrix::Zero(p, s);
  for (Index i = 0; i < p; ++i) {
    const Index j = static_cast<Index>(std::llround(static_cast<double>(i) * static_cast<double>(s) /
                                                    static_cast<double>(p)));
    H(i, std::min(j, s - 1)) = 1.0;
  }
  return H;
}

Matrix build_R(Index p, const CovarianceSpec& spec) { return soar_covariance(p, spec); }

std::vector<Matrix> build_models(const ProblemSpec& spec) {
  if (spec.family == ProblemFamily::heat)
    return std::vector<Matrix>(static_cast<std::size_t>(spec.N), heat_model(spec.s, spec.dt, spec.dx));
  const Vector x0 = lorenz96_spinup(spec.s, spec.spinup_steps, spec.spinup_dt);
  return lorenz96_models(x0, spec.N, spec.dt);
}

ProblemFactory::ProblemFactory(const ProblemSpec& spec) : spec_(spec) {
  spec_.validate();
  B_ = soar_covariance(spec_.s, spec_.cov_B);
  Q_ = soar_covariance(spec_.s, spec_.cov_Q);
  R_ = build_R(spec_.p, spec_.cov_R);
  H_ = build_observation(spec_.s, spec_.p);
  models_ = build_models(spec_);
  LB_ = spd_factor(B_, "B").matrixL();
  LQ_ = spd_factor(Q_, "Q").matrixL();
  LR_ = spd_factor(R_, "R").matrixL();
}

SystemData ProblemFactory::realization(std::uint64_t seed) const {
  const Index s = spec_.s, p = spec_.p, n = spec_.N + 1;
  Matrix b = Matrix::Zero(s, n), d = Matrix::Zero(p, n);
  if (!spec_.zero_rhs) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    auto draw = [&](Index rows, Index cols) {
      Matrix X(rows, cols);
      for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) X(i, j) = nd(rng);
      return X;
    };
    const Matrix xb = draw(s, n), xd = draw(p, n);
    b.col(0) = LB_ * xb.col(0);
    if (n > 1) b.rightCols(n - 1) = LQ_ * xb.rightCols(n - 1);
    d = LR_ * xd;
  }
  return SystemData(B_, Q_, R_, H_, models_, StateBlockMatrix(b), ObsBlockMatrix(d));
}

SystemData make_realization(const ProblemSpec& spec, std::uint64_t seed) {
  return ProblemFactory(spec).realization(seed);
}

}  // namespace stein4dvar
