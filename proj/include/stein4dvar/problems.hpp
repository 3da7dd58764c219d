#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stein4dvar/core.hpp"

namespace stein4dvar {

enum class ProblemFamily { lorenz96, heat };
ProblemFamily parse_family(const std::string& text);
std::string family_name(ProblemFamily f);

// Distance used inside the SOAR kernel for points on the unit circle.
enum class SoarDistance { chordal, circular };

struct CovarianceSpec {
  double L = 0.6;
  double sigma = 0.5;
  Index nnz = 0;             // band width in entries per row, 0 = full
  double rel_floor = 1e-3;   // minimum eigenvalue relative to the largest
  SoarDistance distance = SoarDistance::chordal;
};

struct ProblemSpec {
  ProblemFamily family = ProblemFamily::heat;
  Index s = 200;
  Index p = 100;
  Index N = 10;
  double dt = 4e-7;
  double dx = 1e-3;  // heat only
  CovarianceSpec cov_B{0.6, 0.5, 20, 1e-3, SoarDistance::chordal};
  CovarianceSpec cov_Q{0.75, 0.2, 24, 1e-3, SoarDistance::chordal};
  CovarianceSpec cov_R{0.2, 3.0, 0, 1e-2, SoarDistance::chordal};
  Index spinup_steps = 100;
  double spinup_dt = 0.05;
  bool zero_rhs = false;

  double heat_ratio() const { return dt / (dx * dx); }
  void validate() const;
};

// Lorenz96 vector field (x_{i+1} - x_{i-2}) x_{i-1} - x_i + 8, periodic.
Vector lorenz96_rhs(const Vector& x);
// Jacobian of the vector field.
Matrix lorenz96_jacobian(const Vector& x);
// One RK4 step.
Vector lorenz96_step(const Vector& x, double dt);
// Jacobian of one RK4 step at x.
Matrix lorenz96_tlm(const Vector& x, double dt);
// x_i = 8 + 0.01 sin(2 pi i / s) advanced by `steps` RK4 steps of size `dt`.
Vector lorenz96_spinup(Index s, Index steps, double dt);
// M_1..M_N along the trajectory started at x0 with step dt.
std::vector<Matrix> lorenz96_models(const Vector& x0, Index N, double dt);

Matrix heat_model(Index s, double dt, double dx);

Matrix soar_covariance(Index s, const CovarianceSpec& spec);
Matrix build_observation(Index s, Index p);
Matrix build_R(Index p, const CovarianceSpec& spec);

std::vector<Matrix> build_models(const ProblemSpec& spec);

// B, Q, R, H and the models are deterministic in spec; b and d are drawn from
// N(0, B), N(0, Q), N(0, R) with a generator seeded by `seed`.
SystemData make_realization(const ProblemSpec& spec, std::uint64_t seed);

// Reuses fixed problem matrices across realizations.
class ProblemFactory {
 public:
  explicit ProblemFactory(const ProblemSpec& spec);
  SystemData realization(std::uint64_t seed) const;
  const ProblemSpec& spec() const { return spec_; }
  const std::vector<Matrix>& models() const { return models_; }

 private:
  ProblemSpec spec_;
  Matrix B_, Q_, R_, H_;
  Matrix LB_, LQ_, LR_;
  std::vector<Matrix> models_;
};

}  // namespace stein4dvar
