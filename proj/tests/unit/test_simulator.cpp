#include <gtest/gtest.h>

#include <cmath>

#include "gdfm/errors.hpp"
#include "gdfm/models.hpp"
#include "gdfm/pca.hpp"
#include "gdfm/simulator.hpp"
#include "oracles.hpp"

namespace gdfm {
namespace {

// R^2 of eps_t on F_t, ..., F_{t-lags} (first `r` factors), fitted by the
// normal equations.
double recovery_r2(const SimulatedPanel& sim, Index lags, Index r) {
  const Index T = sim.F.rows();
  const Index rows = T - lags;
  Matrix x(rows, r * (lags + 1));
  for (Index l = 0; l <= lags; ++l) x.middleCols(l * r, r) = sim.F.leftCols(r).middleRows(lags - l, rows);
  const Vector e = sim.eps.col(0).tail(rows);
  const Vector b = testing::gauss_jordan_solve(x.transpose() * x, x.transpose() * e);
  return 1.0 - (e - x * b).squaredNorm() / e.squaredNorm();
}

Index singular_rank(const Matrix& a) {
  Vector values;
  Matrix vectors;
  testing::jacobi_eigen(a.transpose() * a, values, vectors);
  const double top = std::sqrt(std::max(values(0), 0.0));
  Index rank = 0;
  for (Index k = 0; k < values.size(); ++k) rank += std::sqrt(std::max(values(k), 0.0)) > 1e-10 * top;
  return rank;
}

TEST(Lyapunov, MatchesSeriesOracle) {
  for (const auto& model : {benchmark_dynamics(), example1_dynamics(), fred_like_model(60, 1)}) {
    const Matrix q = model.G_bar * model.G_bar.transpose();
    const Matrix expected = testing::lyapunov_series(model.M, q);
    EXPECT_LT((lyapunov(model.M, q) - expected).cwiseAbs().maxCoeff(), 1e-10) << model.name;
  }
}

TEST(Lyapunov, UnstableTransitionIsRejected) {
  EXPECT_THROW(lyapunov(Matrix::Identity(2, 2), Matrix::Identity(2, 2)), DomainError);
  auto model = one_factor_model(5);
  model.M(0, 0) = 1.0;
  EXPECT_THROW(simulate(model, 50, 1), DomainError);
}

TEST(Normalize, StrongBlockHasIdentityVariance) {
  auto raw = lagged_var_dynamics((Matrix(2, 2) << 0.7, 0.1, 0.0, 0.4).finished(), (Matrix(2, 1) << 2.0, 1.0).finished());
  raw.H = Matrix::Ones(3, raw.m);
  raw.rho = Vector::Zero(3);
  raw.innovation_sd = Vector::Ones(3);
  const auto model = normalize(raw);
  const Matrix sigma = state_covariance(model);
  EXPECT_LT((sigma.topLeftCorner(2, 2) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(sigma.block(0, 2, 2, model.w).cwiseAbs().maxCoeff(), 1e-10);
  const Matrix before = raw.H * state_covariance(raw) * raw.H.transpose();
  const Matrix after = model.H * sigma * model.H.transpose();
  EXPECT_LT((before - after).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_TRUE(model.normalized);
}

TEST(Miniphase, ZeroTransitionPasses) {
  StateSpaceModel model;
  model.r = 2;
  model.q = 2;
  model.m = 2;
  model.M = Matrix::Zero(2, 2);
  model.G_bar = (Matrix(2, 2) << 1.0, 0.5, 0.0, 1.0).finished();
  EXPECT_TRUE(check_miniphase(model).pass);
}

TEST(Miniphase, ExampleOneAgreesWithShockRecovery) {
  const auto model = example1_model(10, 2);
  const auto result = check_miniphase(model);
  EXPECT_TRUE(result.pass);
  const auto sim = simulate(model, 50000, 3);
  EXPECT_EQ(sim.F.col(1), Vector::Zero(50000));
  EXPECT_GT(recovery_r2(sim, 8, 1), 0.999);
}

TEST(Miniphase, BenchmarkPasses) {
  EXPECT_TRUE(check_miniphase(benchmark_model(30, 4)).pass);
}

TEST(Miniphase, NonInvertibleMovingAverageFails) {
  const auto model = ma_failure_model();
  const auto result = check_miniphase(model);
  ASSERT_FALSE(result.pass);
  EXPECT_LT(std::abs(result.z), 1.0);
  EXPECT_EQ(result.required, 3);
  Matrix pencil = Matrix::Zero(model.m + model.r, model.m + model.q);
  const double z = result.z.real();
  ASSERT_NEAR(result.z.imag(), 0.0, 1e-12);
  pencil.topLeftCorner(model.m, model.m) = Matrix::Identity(model.m, model.m) - z * model.M;
  pencil.topRightCorner(model.m, model.q) = -model.G_bar;
  pencil.bottomLeftCorner(model.r, model.r) = Matrix::Identity(model.r, model.r);
  EXPECT_LT(singular_rank(pencil), 3);
  EXPECT_NEAR(z, 0.5, 1e-8);
  const auto sim = simulate(model, 50000, 5);
  EXPECT_LT(recovery_r2(sim, 8, 1), 0.9);
}

TEST(Simulate, SeedDeterminism) {
  const auto model = benchmark_model(40, 6);
  const auto a = simulate(model, 300, 7);
  const auto b = simulate(model, 300, 7);
  const auto c = simulate(model, 300, 8);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.eps, b.eps);
  EXPECT_NE(a.y, c.y);
  EXPECT_EQ(a.seed, 7u);
}

TEST(Simulate, DecompositionIdentitiesAreExact) {
  const auto model = benchmark_model(50, 9);
  const auto sim = simulate(model, 400, 10);
  EXPECT_EQ(sim.y.rows(), 400);
  EXPECT_LT((sim.chi + sim.xi - sim.y).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((sim.common + sim.weak - sim.chi).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((sim.F * model.strong_loadings().transpose() - sim.common).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(sim.F, sim.state.leftCols(model.r));
}

TEST(Simulate, OneFactorModelHasIdenticalCommonComponents) {
  const auto sim = simulate(one_factor_model(6), 200, 11);
  for (Index i = 1; i < 6; ++i) EXPECT_EQ(sim.chi.col(i), sim.chi.col(0));
  EXPECT_EQ(sim.weak, Matrix::Zero(200, 6));
}

TEST(Simulate, StationaryFactorVarianceIsIdentity) {
  const auto model = benchmark_model(40, 12);
  Matrix mean = Matrix::Zero(model.r, model.r);
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    const auto sim = simulate(model, 10000, 100 + s);
    mean += sim.F.transpose() * sim.F / (10000.0 * seeds);
  }
  EXPECT_LT((mean - Matrix::Identity(model.r, model.r)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Simulate, IdiosyncraticEigenvalueStaysBounded) {
  auto top = [](Index n) {
    const auto sim = simulate(benchmark_model(n, 13), 5000, 14);
    return sym_eigen(second_moment(sim.xi)).eigenvalues(0);
  };
  const double small = top(100), large = top(200);
  EXPECT_LT(large, 1.2 * small);
}

TEST(Simulate, ExampleOneStackedVarianceIsSingular) {
  const auto model = example1_model(10, 15);
  const Matrix gram = population_lag_gram(model, 1);
  Vector values;
  Matrix vectors;
  testing::jacobi_eigen(gram, values, vectors);
  EXPECT_LT(values(values.size() - 1), 1e-12 * values(0));
}

TEST(PopulationShares, DesignatedWeakSeriesInRange) {
  const auto model = benchmark_model(200, 16);
  const auto shares = population_shares(model);
  ASSERT_FALSE(model.weak_series.empty());
  for (Index i : model.weak_series) {
    EXPECT_GE(shares.weak(i), 0.1);
    EXPECT_LE(shares.weak(i), 0.5);
  }
  for (Index i = 0; i < model.n(); ++i) {
    EXPECT_NEAR(shares.chi(i) + shares.xi(i), 1.0, 1e-12);
    EXPECT_NEAR(shares.common(i) + shares.weak(i), shares.chi(i), 1e-10);
  }
}

TEST(PopulationShares, MatchSampleMoments) {
  const auto model = benchmark_model(30, 17);
  const auto shares = population_shares(model);
  const auto sim = simulate(model, 200000, 18);
  for (Index i : {Index{0}, model.weak_series.front()}) {
    const double vy = sim.y.col(i).squaredNorm();
    EXPECT_NEAR(sim.weak.col(i).squaredNorm() / vy, shares.weak(i), 0.02);
    EXPECT_NEAR(sim.chi.col(i).squaredNorm() / vy, shares.chi(i), 0.02);
  }
}

TEST(Models, SpectralRadiusAndRegistry) {
  EXPECT_NEAR(spectral_radius((Matrix(2, 2) << 0.0, 1.0, -0.25, 0.0).finished()), 0.5, 1e-12);
  for (const auto& name : model_names()) {
    const auto model = make_model(name, 30, 1);
    EXPECT_NO_THROW(model.validate()) << name;
    EXPECT_LT(spectral_radius(model.M), 1.0) << name;
  }
  EXPECT_THROW(make_model("nope", 10, 1), ConfigError);
}

TEST(Models, ValidationBounds) {
  auto model = benchmark_model(40, 1);
  model.rho(3) = 0.95;
  EXPECT_THROW(model.validate(), InputError);
  model = benchmark_model(40, 1);
  model.coupling = 0.31;
  EXPECT_THROW(model.validate(), InputError);
}

}  // namespace
}  // namespace gdfm
