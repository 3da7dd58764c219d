#include <gtest/gtest.h>

#include <sstream>

#include "oracle/dense_oracle.hpp"
#include "stein4dvar/diagnostics.hpp"

using namespace stein4dvar;

TEST(DenseAssembly, MatchesOracle) {
  const SystemData sys = random_system({5, 2, 3}, 4);
  const DenseAssembly da = assemble_dense(sys);
  const Matrix A = oracle::dense_A(sys.B(), sys.Q(), sys.R(), sys.H(), sys.models());
  const Matrix S = oracle::dense_S(sys.B(), sys.Q(), sys.R(), sys.H(), sys.models());
  EXPECT_LT((da.A - A).norm(), 1e-12 * A.norm());
  EXPECT_LT((da.S - S).norm(), 1e-10 * S.norm());
  EXPECT_EQ(da.P_D.size(), 0);
}

TEST(DenseAssembly, PreconditionerBlocks) {
  const SystemData sys = random_system({5, 2, 3}, 5);
  PrecondConfig cfg;
  cfg.kind = PrecondKind::P_D;
  const Preconditioner P(sys, cfg);
  const DenseAssembly da = assemble_dense(sys, &P);
  const Index n = sys.n_times();
  const Matrix Lhat = oracle::dense_stein(P.mhat(), n);
  EXPECT_LT((da.Lhat - Lhat).norm(), 1e-10);
  const Matrix D = oracle::dense_D(sys.B(), sys.Q(), n);
  const Matrix Shat = Lhat.transpose() * D.inverse() * Lhat;
  EXPECT_LT((da.Shat - Shat).norm(), 1e-8 * Shat.norm());
  // P_D^-1 through the operator agrees with the assembled inverse.
  const Vector v = Vector::LinSpaced(da.A.rows(), -1.0, 2.0);
  const Vector ref = da.P_D.lu().solve(v);
  const Vector got = P.apply(SaddleTriple::from_vec(v, 5, 2, n)).vec();
  EXPECT_LT((got - ref).norm(), 1e-9 * ref.norm());
}

TEST(DenseAssembly, RejectsLargeSystems) {
  const SystemData sys = random_system({80, 40, 30, 0.5}, 1);
  EXPECT_THROW(assemble_dense(sys), std::invalid_argument);
}

TEST(RandomSystem, DeterministicAndScaled) {
  const RandomSystemSpec spec{7, 3, 4, 1.3};
  const SystemData a = random_system(spec, 9), b = random_system(spec, 9);
  EXPECT_EQ((a.model(2) - b.model(2)).norm(), 0.0);
  EXPECT_EQ((a.b().mat() - b.b().mat()).norm(), 0.0);
  for (Index i = 1; i <= 4; ++i)
    EXPECT_NEAR(Eigen::JacobiSVD<Matrix>(a.model(i)).singularValues()(0), 1.3, 1e-12);
}

class SpectrumCases : public ::testing::TestWithParam<SpectrumCase> {};

TEST_P(SpectrumCases, HoldOnSeveralSeeds) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SpectrumReport rep = verify_spectrum(GetParam(), seed);
    EXPECT_TRUE(rep.pass) << rep.case_name << " seed " << seed << ": " << rep.detail << " err " << rep.max_error
                          << " units " << rep.unit_count << "/" << rep.expected_unit_count;
  }
}

INSTANTIATE_TEST_SUITE_P(AllCases, SpectrumCases, ::testing::ValuesIn(all_spectrum_cases()),
                         [](const auto& info) { return spectrum_case_name(info.param); });

TEST(SpectrumCases, LowRankFullRankIsExact) {
  SpectrumOptions opt = default_spectrum_options(SpectrumCase::schur_lowrank);
  opt.use_case_defaults = false;
  opt.r = opt.system.p;
  const SpectrumReport rep = verify_spectrum(SpectrumCase::schur_lowrank, 3, opt);
  EXPECT_TRUE(rep.pass) << rep.detail;
  EXPECT_EQ(rep.unit_count, opt.system.s * (opt.system.N + 1));
  EXPECT_NEAR(rep.measured_max, 1.0, 1e-8);
}

TEST(SpectrumCases, NamesRoundTripAndCsv) {
  for (SpectrumCase c : all_spectrum_cases()) EXPECT_EQ(parse_spectrum_case(spectrum_case_name(c)), c);
  EXPECT_THROW(parse_spectrum_case("nope"), std::invalid_argument);
  EXPECT_EQ(parse_spectrum_case("cor_diag"), SpectrumCase::diag_exact_schur);
  EXPECT_EQ(parse_spectrum_case("thm21"), SpectrumCase::basis_parity);
  SpectrumReport rep;
  rep.case_name = "stein_bound";
  rep.detail = "a \"quoted\", b";
  std::ostringstream os;
  write_spectrum_csv(os, {rep});
  EXPECT_EQ(os.str(),
            "case,seed,measured_min,measured_max,unit_count,expected_unit_count,max_error,pass,detail\n"
            "stein_bound,0,0,0,-1,-1,0,0,\"a \"\"quoted\"\", b\"\n");
}
