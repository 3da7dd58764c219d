#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "oracle/dense_oracle.hpp"
#include "stein4dvar/problems.hpp"
#include "stein4dvar/stein.hpp"

using namespace stein4dvar;

TEST(Lorenz96, ZeroStepIsIdentity) {
  const Vector x = lorenz96_spinup(12, 10, 0.05);
  EXPECT_EQ((lorenz96_tlm(x, 0.0) - Matrix::Identity(12, 12)).norm(), 0.0);
}

TEST(Lorenz96, TlmMatchesCentralDifferences) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10; ++trial) {
    Vector x(10);
    for (Index i = 0; i < 10; ++i) x(i) = 8.0 + 2.0 * nd(rng);
    const double dt = 0.05;
    const Matrix M = lorenz96_tlm(x, dt);
    const double eps = 1e-6;
    for (Index j = 0; j < 10; ++j) {
      const Vector e = eps * Vector::Unit(10, j);
      const Vector fd = (lorenz96_step(x + e, dt) - lorenz96_step(x - e, dt)) / (2.0 * eps);
      EXPECT_LT((fd - M.col(j)).cwiseAbs().maxCoeff(), 1e-6) << trial << " " << j;
    }
  }
}

TEST(Lorenz96, EquilibriumIsFixedPoint) {
  const Vector x = Vector::Constant(8, 8.0);
  EXPECT_LT(lorenz96_rhs(x).norm(), 1e-14);
  EXPECT_LT((lorenz96_step(x, 0.1) - x).norm(), 1e-13);
}

TEST(Lorenz96, ModelDefectsGrowWithTimeStep) {
  const Vector x0 = lorenz96_spinup(40, 100, 0.05);
  double previous = -1.0;
  for (double dt : {1e-6, 1e-3, 5e-2, 1e-1}) {
    const auto models = lorenz96_models(x0, 10, dt);
    double spread = 0.0;
    for (const auto& Mi : models)
      for (const auto& Mj : models) spread = std::max(spread, (Mi - Mj).norm());
    EXPECT_GT(spread, previous) << dt;
    previous = spread;
  }
}

TEST(Lorenz96, BoundNearOneForSmallStep) {
  const Vector x0 = lorenz96_spinup(40, 100, 0.05);
  const auto models = lorenz96_models(x0, 10, 1e-6);
  const Matrix mhat = select_mhat(models, MhatStrategy::parse("sym_index:1"));
  const BoundReport br = stein_bound(models, mhat);
  EXPECT_NEAR(br.mhat_norm, 1.0, 5e-3);
  EXPECT_LT(br.upper_bound, 1.1);
}

TEST(HeatModel, StructureAndRatio) {
  const Matrix M = heat_model(10, 4e-7, 1e-3);
  EXPECT_NEAR(M(3, 3), 0.2, 1e-14);
  EXPECT_NEAR(M(3, 4), 0.4, 1e-14);
  EXPECT_EQ((M - M.transpose()).norm(), 0.0);
  EXPECT_EQ(M.row(0).norm() + M.row(9).norm() + M.col(0).norm() + M.col(9).norm(), 0.0);
  for (Index i = 2; i < 8; ++i) EXPECT_NEAR(M.row(i).sum(), 1.0, 1e-14);
  EXPECT_THROW(heat_model(2, 1e-7, 1e-3), std::invalid_argument);
}

TEST(HeatModel, StableBelowHalf) {
  for (Index s : {20, 200}) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(heat_model(s, 4.9e-7, 1e-3), Eigen::EigenvaluesOnly);
    EXPECT_LT(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(Soar, ContractHolds) {
  for (SoarDistance dist : {SoarDistance::chordal, SoarDistance::circular}) {
    const CovarianceSpec spec{0.6, 0.5, 21, 1e-3, dist};
    const Matrix C = soar_covariance(100, spec);
    EXPECT_EQ((C - C.transpose()).norm(), 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(C, Eigen::EigenvaluesOnly);
    EXPECT_GE(es.eigenvalues().minCoeff(), 1e-3 * es.eigenvalues().maxCoeff() * (1 - 1e-10));
    const double tau = C(0, 0) - 0.25;
    EXPECT_GE(tau, 0.0);
    for (Index i = 0; i < 100; ++i) EXPECT_NEAR(C(i, i), 0.25 + tau, 1e-14);
    EXPECT_EQ(C(0, 11), 0.0);
    EXPECT_NE(C(0, 10), 0.0);
    EXPECT_NE(C(0, 90), 0.0);
  }
}

TEST(Soar, ShortLengthScaleApproachesScaledIdentity) {
  const Matrix C = soar_covariance(50, {1e-6, 0.3, 0, 0.0, SoarDistance::chordal});
  EXPECT_LT((C - 0.09 * Matrix::Identity(50, 50)).norm(), 1e-12);
}

TEST(Observation, UnitRowsAscending) {
  const Matrix H = build_observation(10, 4);
  Index last = -1;
  for (Index i = 0; i < 4; ++i) {
    Index j;
    EXPECT_EQ(H.row(i).maxCoeff(&j), 1.0);
    EXPECT_EQ(H.row(i).sum(), 1.0);
    EXPECT_GT(j, last);
    last = j;
  }
  EXPECT_EQ((H * H.transpose() - Matrix::Identity(4, 4)).norm(), 0.0);
  EXPECT_EQ((build_observation(6, 6) - Matrix::Identity(6, 6)).norm(), 0.0);
  EXPECT_THROW(build_observation(3, 4), std::invalid_argument);
}

namespace {
ProblemSpec small_spec(ProblemFamily f) {
  ProblemSpec spec;
  spec.family = f;
  spec.s = 20;
  spec.p = 8;
  spec.N = 3;
  spec.dt = f == ProblemFamily::heat ? 4e-7 : 1e-3;
  spec.cov_B.nnz = 9;
  spec.cov_Q.nnz = 11;
  return spec;
}
}  // namespace

TEST(Realization, DeterministicPerSeed) {
  for (ProblemFamily f : {ProblemFamily::heat, ProblemFamily::lorenz96}) {
    const ProblemSpec spec = small_spec(f);
    const SystemData a = make_realization(spec, 7), b = make_realization(spec, 7), c = make_realization(spec, 8);
    EXPECT_EQ((a.b().mat() - b.b().mat()).norm(), 0.0);
    EXPECT_EQ((a.d().mat() - b.d().mat()).norm(), 0.0);
    EXPECT_GT((a.b().mat() - c.b().mat()).norm(), 0.0);
    EXPECT_EQ(a.n_models(), 3);
    EXPECT_EQ((a.model(1) - b.model(1)).norm(), 0.0);
  }
}

TEST(Realization, ZeroRhsFlag) {
  ProblemSpec spec = small_spec(ProblemFamily::heat);
  spec.zero_rhs = true;
  const SystemData sys = make_realization(spec, 1);
  EXPECT_EQ(sys.b().norm() + sys.d().norm(), 0.0);
}

TEST(Realization, BackgroundSampleCovariance) {
  ProblemSpec spec = small_spec(ProblemFamily::heat);
  spec.N = 1;
  const ProblemFactory factory(spec);
  Matrix acc = Matrix::Zero(20, 20);
  const int draws = 1000;
  for (int k = 0; k < draws; ++k) {
    const Vector b0 = factory.realization(static_cast<std::uint64_t>(k)).b().mat().col(0);
    acc += b0 * b0.transpose();
  }
  acc /= draws;
  const Matrix B = factory.realization(0).B();
  EXPECT_LT((acc - B).norm() / B.norm(), 0.15);
}

TEST(ProblemSpecValidation, RejectsBadInput) {
  ProblemSpec spec = small_spec(ProblemFamily::heat);
  spec.p = 21;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = small_spec(ProblemFamily::heat);
  spec.dt = 0.0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  EXPECT_THROW(parse_family("burgers"), std::invalid_argument);
  EXPECT_EQ(parse_family(family_name(ProblemFamily::lorenz96)), ProblemFamily::lorenz96);
}
