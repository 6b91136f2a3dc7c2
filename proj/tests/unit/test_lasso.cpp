#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gdfm/errors.hpp"
#include "gdfm/lasso.hpp"
#include "gdfm/models.hpp"
#include "gdfm/pca.hpp"
#include "gdfm/pipeline.hpp"
#include "oracles.hpp"

namespace gdfm {
namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(gen);
  return m;
}

double soft(double z, double lambda) { return z > lambda ? z - lambda : (z < -lambda ? z + lambda : 0.0); }

void expect_kkt(const Matrix& x, const Vector& y, const LassoFit& fit, double tol) {
  const double t = static_cast<double>(x.rows());
  const Vector grad = x.transpose() * (y - x * fit.coefficients) / t;
  for (Index j = 0; j < x.cols(); ++j) {
    if (fit.coefficients(j) != 0.0) {
      EXPECT_NEAR(std::abs(grad(j)), fit.penalty, tol) << "active " << j;
      EXPECT_GT(grad(j) * fit.coefficients(j), 0.0);
    } else {
      EXPECT_LE(std::abs(grad(j)), fit.penalty + tol) << "inactive " << j;
    }
  }
}

// Panel whose leading principal components are the columns of `factors`:
// loading columns are orthogonal with distinct norms.
Matrix factor_panel(const Matrix& factors, Index n, double noise, std::uint64_t seed) {
  const Index r = factors.cols();
  Matrix loadings = Matrix::Zero(n, r);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < r; ++j) loadings(i, j) = (((i >> j) & 1) ? 1.0 : -1.0) * (2.0 - 0.4 * static_cast<double>(j));
  }
  return factors * loadings.transpose() + noise * random_matrix(factors.rows(), n, seed);
}

TEST(LassoSolve, ZeroPenaltyIsOls) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = random_matrix(120, 8, seed);
    const Vector y = random_matrix(120, 1, seed + 50);
    const auto fit = lasso_solve(x, y, 0.0);
    const Vector ols = testing::gauss_jordan_solve(x.transpose() * x, x.transpose() * y);
    EXPECT_LT((fit.coefficients - ols).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(LassoSolve, AboveLambdaMaxIsEmpty) {
  const Matrix x = random_matrix(60, 5, 1);
  const Vector y = random_matrix(60, 1, 2);
  const double lmax = (x.transpose() * y / 60.0).cwiseAbs().maxCoeff();
  for (double lambda : {lmax, 1.5 * lmax}) {
    const auto fit = lasso_solve(x, y, lambda);
    EXPECT_TRUE(fit.active_set.empty());
    EXPECT_EQ(fit.coefficients, Vector::Zero(5));
  }
}

TEST(LassoSolve, OrthonormalDesignSoftThresholds) {
  const Index T = 64, k = 6;
  const Matrix q = random_matrix(T, k, 3).householderQr().householderQ() * Matrix::Identity(T, k);
  const Matrix x = std::sqrt(static_cast<double>(T)) * q;
  const Vector y = x * (Vector(k) << 1.0, -0.5, 0.2, 0.0, 0.05, -2.0).finished() + 0.3 * random_matrix(T, 1, 4);
  const Vector z = x.transpose() * y / static_cast<double>(T);
  for (double lambda : {0.0, 0.01, 0.1, 0.3, 0.7, 1.5}) {
    const auto fit = lasso_solve(x, y, lambda);
    for (Index j = 0; j < k; ++j) EXPECT_NEAR(fit.coefficients(j), soft(z(j), lambda), 1e-8);
  }
}

TEST(LassoSolve, KktHoldsOnCorrelatedDesigns) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Matrix x = random_matrix(200, 30, seed);
    x.rightCols(15) = 0.9 * x.leftCols(15) + 0.2 * x.rightCols(15);
    const Vector y = x.col(0) - 0.5 * x.col(20) + random_matrix(200, 1, seed + 9);
    const double lmax = (x.transpose() * y / 200.0).cwiseAbs().maxCoeff();
    for (double frac : {0.5, 0.1, 0.01, 0.001}) expect_kkt(x, y, lasso_solve(x, y, frac * lmax), 1e-6);
  }
}

TEST(LassoSolve, FaceSolveMatchesPlainCoordinateDescent) {
  const auto prepared = prepare_panel(fred_like_panel({}));
  const auto factors = extract_factors(prepared.panel.values, 8);
  const auto basis = build_lag_matrix(factors.factors, 24);
  const Vector y = prepared.panel.values.col(3).tail(basis.rows());
  const Matrix gram = second_moment(basis.design);
  const Vector xty = basis.design.transpose() * y / static_cast<double>(basis.rows());
  const auto grid = penalty_grid_from_max(lasso_lambda_max(xty), 30, 1e-2);
  LassoOptions plain;
  plain.active_set_solve = false;
  const auto fast = lasso_path_gram(gram, xty, grid);
  const auto slow = lasso_path_gram(gram, xty, grid, plain);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_LT((fast[g].coefficients - slow[g].coefficients).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_LT(fast[g].kkt_violation, 1e-6);
  }
}

TEST(LassoSolve, NonConvergenceReportsKkt) {
  Matrix x = random_matrix(50, 10, 5);
  x.col(1) = x.col(0) + 1e-3 * x.col(1);
  const Vector y = x.col(0) + random_matrix(50, 1, 6);
  LassoOptions options;
  options.max_sweeps = 1;
  options.active_set_solve = false;
  try {
    lasso_solve(x, y, 1e-4, options);
    FAIL();
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.kkt_violation(), 0.0);
  }
  EXPECT_THROW(lasso_solve(x, y, -1.0), InputError);
}

TEST(PenaltyGrid, EndpointsAndSpacing) {
  const Matrix x = random_matrix(40, 4, 7);
  const Vector y = random_matrix(40, 1, 8);
  const double lmax = (x.transpose() * y / 40.0).cwiseAbs().maxCoeff();
  const auto two = penalty_grid(x, y, 2, 0.01);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_DOUBLE_EQ(two[0], lmax);
  EXPECT_DOUBLE_EQ(two[1], 0.01 * lmax);
  const auto grid = penalty_grid(x, y, 100, 1e-3);
  ASSERT_EQ(grid.size(), 100u);
  for (std::size_t g = 1; g < grid.size(); ++g) EXPECT_NEAR(std::log(grid[g - 1] / grid[g]), std::log(1e3) / 99.0, 1e-12);
  EXPECT_TRUE(lasso_solve(x, y, grid[0]).active_set.empty());
  EXPECT_THROW(penalty_grid(x, y, 1, 0.1), InputError);
  EXPECT_THROW(penalty_grid(x, y, 5, 1.0), InputError);
}

TEST(LassoPath, ActiveSetShrinksWithPenaltyOnOrthonormalDesign) {
  const Index T = 100, k = 10;
  const Matrix x = std::sqrt(100.0) * Matrix(random_matrix(T, k, 9).householderQr().householderQ() * Matrix::Identity(T, k));
  const Vector y = x * Vector::LinSpaced(k, -1.0, 1.0) + random_matrix(T, 1, 10);
  const Matrix gram = second_moment(x);
  const Vector xty = x.transpose() * y / static_cast<double>(T);
  const auto grid = penalty_grid_from_max(lasso_lambda_max(xty), 50, 1e-3);
  const auto path = lasso_path_gram(gram, xty, grid);
  for (std::size_t g = 1; g < path.size(); ++g) EXPECT_GE(path[g].active_set.size(), path[g - 1].active_set.size());
}

TEST(RollingCalibrate, SingleWindowZeroPenaltyIsOlsHoldout) {
  const Matrix f = random_matrix(130, 2, 11);
  const Matrix y = factor_panel(f, 12, 0.5, 12);
  const Panel panel{y, {}, {}, false, {}, {}};
  const Index p = 2, calib = 104;  // floor(0.8 * 130)
  const Index window = calib - p;
  const std::vector<double> grid{0.0};
  const auto res = rolling_calibrate(panel, 0, 2, p, window, 0.8, grid);
  ASSERT_EQ(res.holdout_rows.size(), 1u);
  EXPECT_EQ(res.holdout_rows[0], calib - 1);

  const auto fac = extract_factors(Matrix(y.topRows(calib)), 2);
  const auto basis = build_lag_matrix(fac.factors, p);
  const Matrix xfit = basis.design.topRows(window - 1);
  const Vector yfit = y.col(0).segment(p, window - 1);
  const Vector beta = testing::gauss_jordan_solve(xfit.transpose() * xfit, xfit.transpose() * yfit);
  const double err = y(calib - 1, 0) - basis.design.row(window - 1).dot(beta);
  EXPECT_NEAR(res.mse_per_penalty[0], err * err, 1e-8);
  EXPECT_EQ(res.optimal_penalty, 0.0);
}

TEST(RollingCalibrate, WindowCountAndHoldoutRows) {
  const Matrix y = factor_panel(random_matrix(764, 8, 13), 40, 1.0, 14);
  CalibrationOptions options;
  const RollingCalibrator calibrator(y, options);
  EXPECT_EQ(calibrator.calibration_rows(), 611);
  EXPECT_EQ(calibrator.windows(), 611 - 24 - 488 + 1);
  const auto grid = calibrator.default_grid(0, 10, 1e-2);
  const auto res = calibrator.calibrate(0, grid);
  EXPECT_EQ(res.holdout_rows.front(), 24 + 487);
  EXPECT_EQ(res.holdout_rows.back(), 610);
  EXPECT_EQ(res.window_selections.size(), static_cast<std::size_t>(calibrator.windows()));
  for (double m : res.mse_per_penalty) EXPECT_TRUE(std::isfinite(m));
  EXPECT_NE(std::find(grid.begin(), grid.end(), res.optimal_penalty), grid.end());
}

TEST(RollingCalibrate, RejectsOversizedWindow) {
  const Matrix y = random_matrix(100, 6, 15);
  CalibrationOptions options;
  options.r = 2;
  options.p = 2;
  options.window = 79;
  EXPECT_THROW(RollingCalibrator(y, options), InputError);
  options.window = 78;
  EXPECT_NO_THROW(RollingCalibrator(y, options));
}

TEST(RollingCalibrate, DeterministicAcrossRuns) {
  const Matrix y = factor_panel(random_matrix(300, 3, 16), 20, 1.0, 17);
  CalibrationOptions options;
  options.r = 3;
  options.p = 3;
  options.window = 120;
  const RollingCalibrator a(y, options), b(y, options);
  const auto grid = a.default_grid(1, 20);
  const auto ra = a.calibrate(1, grid);
  const auto rb = b.calibrate(1, grid);
  EXPECT_EQ(ra.mse_per_penalty, rb.mse_per_penalty);
  EXPECT_EQ(ra.window_selections, rb.window_selections);
  EXPECT_EQ(ra.optimal_index, rb.optimal_index);
}

TEST(RollingCalibrate, PerWindowFactorsUseOnlyWindowRows) {
  const Matrix y = factor_panel(random_matrix(200, 2, 18), 15, 0.8, 19);
  CalibrationOptions options;
  options.r = 2;
  options.p = 1;
  options.window = 100;
  options.reestimate_per_window = true;
  const RollingCalibrator calibrator(y, options);
  const auto res = calibrator.calibrate(0, calibrator.default_grid(0, 10));
  Matrix changed = y;
  changed.bottomRows(200 - 160).setConstant(1e6);  // beyond the calibration set
  const auto again = RollingCalibrator(changed, options).calibrate(0, calibrator.default_grid(0, 10));
  EXPECT_EQ(res.mse_per_penalty, again.mse_per_penalty);
}

TEST(RollingCalibrate, ContemporaneousTruthIsSelected) {
  Index hits = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Matrix f = random_matrix(250, 2, 1000 + seed);
    Matrix y = factor_panel(f, 30, 1.0, 2000 + seed);
    y.col(0) = f.col(0) + 0.5 * random_matrix(250, 1, 3000 + seed);
    CalibrationOptions options;
    options.r = 2;
    options.p = 2;
    options.window = 80;
    const RollingCalibrator calibrator(y, options);
    const auto res = calibrator.calibrate(0, calibrator.default_grid(0, 20, 1e-2));
    for (const auto& active : res.window_selections) {
      hits += std::find(active.begin(), active.end(), Index{0}) != active.end();
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(hits) / static_cast<double>(total), 0.9);
}

TEST(FinalSelect, ZeroPenaltyKeepsEveryColumn) {
  const Matrix f = random_matrix(200, 2, 20);
  const auto basis = build_lag_matrix(f, 2);
  const Vector y = basis.design * Vector::LinSpaced(6, 1.0, 2.0) + random_matrix(198, 1, 21);
  const auto sel = final_select(basis, y, 0.0);
  EXPECT_EQ(sel.mask.count(), 6);
  EXPECT_TRUE(sel.dropped.empty());
}

TEST(FinalSelect, EmptySelectionIsAnError) {
  const auto basis = build_lag_matrix(random_matrix(100, 2, 22), 1);
  const Vector y = random_matrix(99, 1, 23);
  const double lmax = (basis.design.transpose() * y / 99.0).cwiseAbs().maxCoeff();
  EXPECT_THROW(final_select(basis, y, 2.0 * lmax), EmptySelectionError);
}

TEST(FinalSelect, DropsSmallestCoefficientOnDeficiency) {
  Matrix f = random_matrix(300, 2, 24);
  f.col(1) = f.col(0) + 0.02 * f.col(1);
  const auto basis = build_lag_matrix(f, 0);
  const Vector y = 1.0 * f.col(0) + 0.3 * f.col(1) + 0.1 * random_matrix(300, 1, 25);
  const auto full = lasso_solve(basis.design, y, 1e-5);
  ASSERT_EQ(full.active_set.size(), 2u);
  const auto sel = final_select(basis, y, 1e-5, {}, 1e-2);
  ASSERT_EQ(sel.dropped.size(), 1u);
  const Index weaker = std::abs(full.coefficients(0)) < std::abs(full.coefficients(1)) ? 0 : 1;
  EXPECT_EQ(sel.dropped[0], weaker);
  EXPECT_EQ(sel.mask.count(), 1);
}

TEST(FinalSelect, SparseTruthIsRecoveredWithFewFalsePositives) {
  Index good = 0;
  const Index seeds = 50, T = 400;
  const double sigma = 1.0;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    const Matrix f = random_matrix(T, 3, 4000 + seed);
    Matrix y = factor_panel(f, 40, 1.0, 5000 + seed);
    Vector target = sigma * random_matrix(T, 1, 6000 + seed);
    for (Index t = 2; t < T; ++t) target(t) += f(t, 0) + 0.6 * f(t - 1, 1) - 0.7 * f(t - 2, 2);
    y.col(0) = target;
    const auto fac = extract_factors(y, 3);
    const auto basis = build_lag_matrix(fac.factors, 2);
    const double lambda = sigma * std::sqrt(2.0 * std::log(9.0) / static_cast<double>(T));
    const auto sel = final_select(basis, y.col(0).tail(basis.rows()), lambda);
    const std::vector<Index> truth{basis.column(0, 0), basis.column(1, 1), basis.column(2, 2)};
    bool superset = true;
    for (Index c : truth) superset = superset && sel.mask.selected[static_cast<std::size_t>(c)];
    if (superset && sel.mask.count() - 3 <= 2) ++good;
  }
  EXPECT_GE(static_cast<double>(good) / static_cast<double>(seeds), 0.8);
}

}  // namespace
}  // namespace gdfm
