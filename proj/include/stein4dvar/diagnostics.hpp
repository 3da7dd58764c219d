#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "stein4dvar/core.hpp"
#include "stein4dvar/precond.hpp"

namespace stein4dvar {

// Dense matrix of a linear map on R^dim, assembled column by column.
Matrix dense_from_operator(const std::function<Vector(const Vector&)>& f, Index dim);

struct DenseAssembly {
  Matrix A, S;
  Matrix D, L, Rb, Hb;  // Kronecker blocks
  Matrix Lhat, Shat;    // empty unless a preconditioner was given
  Matrix P_D, P_T, P_C;
};

inline constexpr Index kDenseAssemblyCap = 5000;

// Everything is assembled through the library operators. Shat is the inverse
// of the assembled Schur-inverse action, so it reflects the inner tolerance.
DenseAssembly assemble_dense(const SystemData& sys, const Preconditioner* P = nullptr);

struct RandomSystemSpec {
  Index s = 6, p = 3, N = 2;
  double model_norm = 0.9;
  double cond_B = 10.0, cond_Q = 10.0, cond_R = 5.0;
};

// Random SPD covariances with log-spaced spectra, Gaussian H and models
// scaled to the given spectral norm.
SystemData random_system(const RandomSystemSpec& spec, std::uint64_t seed);

enum class SpectrumCase {
  diag_exact_schur,    // P_D with Shat = S
  triang_exact_schur,  // P_T with Shat = S
  constraint_exact_L,  // P_C with Lhat = L
  schur_exact_L,       // Shat = L^T D^-1 L against S
  schur_lowrank,       // Shat = L^T D^-1 L + K_r K_r^T against S
  diag_intervals,      // P_D with inexact Shat
  stein_bound,         // Stein approximation bound
  basis_parity,        // zero blocks of the GMRES basis with P_D
};

SpectrumCase parse_spectrum_case(const std::string& text);
std::string spectrum_case_name(SpectrumCase c);
std::vector<SpectrumCase> all_spectrum_cases();

struct SpectrumOptions {
  RandomSystemSpec system;  // sizes; defaults chosen per case when use_case_defaults
  bool use_case_defaults = true;
  Index r = 1;              // rank for schur_lowrank / diag_intervals
  double tol = 1e-8;
};

struct SpectrumReport {
  std::string case_name;
  std::uint64_t seed = 0;
  double measured_min = 0.0;
  double measured_max = 0.0;
  long unit_count = -1;
  long expected_unit_count = -1;
  double max_error = 0.0;  // worst violation measure for the case
  bool pass = false;
  std::string detail;
};

SpectrumOptions default_spectrum_options(SpectrumCase c);
SpectrumReport verify_spectrum(SpectrumCase c, std::uint64_t seed, const SpectrumOptions& opt);
inline SpectrumReport verify_spectrum(SpectrumCase c, std::uint64_t seed) {
  return verify_spectrum(c, seed, default_spectrum_options(c));
}

void write_spectrum_csv(std::ostream& os, const std::vector<SpectrumReport>& reports);

}  // namespace stein4dvar
