#pragma once

#include <span>
#include <string>
#include <vector>

#include "gdfm/lag_design.hpp"
#include "gdfm/panel.hpp"
#include "gdfm/types.hpp"

namespace gdfm {

struct LassoOptions {
  double tolerance = 1e-8;   // stop when the largest coefficient change in a sweep is below this
  long max_sweeps = 100000;  // full plus active-set sweeps
  /// Jump to the exact solution on the current active set and signs when it
  /// is sign-consistent; the sweeps that follow certify it.
  bool active_set_solve = true;
};

/// Minimizer of (1 / 2T) ||y - X b||^2 + lambda ||b||_1 without intercept.
struct LassoFit {
  Vector coefficients;
  double penalty = 0.0;
  std::vector<Index> active_set;
  long sweeps = 0;
  double kkt_violation = 0.0;
};

LassoFit lasso_solve(const Matrix& x, const Vector& y, double lambda, const LassoOptions& options = {});

/// Same problem given gram = X'X / T and xty = X'y / T. `warm_start` may be
/// empty.
LassoFit lasso_solve_gram(const Matrix& gram, const Vector& xty, double lambda, const Vector& warm_start = {},
                          const LassoOptions& options = {});

/// Largest |gradient| at b = 0; every lambda at or above it gives b = 0.
double lasso_lambda_max(const Vector& xty);

/// Descending log-spaced grid from lambda_max down to ratio * lambda_max.
std::vector<double> penalty_grid(const Matrix& x, const Vector& y, Index n_grid = 100, double ratio = 1e-3);
std::vector<double> penalty_grid_from_max(double lambda_max, Index n_grid = 100, double ratio = 1e-3);

/// Warm-started fits along a descending grid.
std::vector<LassoFit> lasso_path_gram(const Matrix& gram, const Vector& xty, std::span<const double> grid,
                                      const LassoOptions& options = {});

/// Largest |(1/T) X_j'(y - X b)| - lambda over inactive columns, or
/// |gradient_j - lambda sign(b_j)| over active ones.
double lasso_kkt_violation(const Matrix& gram, const Vector& xty, const Vector& beta, double lambda);

struct CalibrationOptions {
  Index r = 8;
  Index p = 24;
  Index window = 488;         // design rows per window, the last one held out
  double calib_frac = 0.8;
  Index stride = 1;
  bool reestimate_per_window = false;  // re-run PCA inside each window
  LassoOptions lasso;
};

struct CalibrationResult {
  std::vector<double> penalty_grid;
  std::vector<double> mse_per_penalty;
  double optimal_penalty = 0.0;
  Index optimal_index = 0;
  /// Active sets at the optimal penalty, one per window.
  std::vector<std::vector<Index>> window_selections;
  /// Panel row of each window's held-out observation.
  std::vector<Index> holdout_rows;
  std::vector<std::string> labels;
  /// Windows in which the active-set size grew with lambda somewhere.
  Index monotonicity_violations = 0;
};

/// Rolling-window penalty calibration over the first floor(calib_frac T)
/// rows. Factors and per-window Gram matrices are shared by every series,
/// so one calibrator serves a whole panel; calibrate() is const and safe to
/// call concurrently.
class RollingCalibrator {
 public:
  RollingCalibrator(const Matrix& panel_values, const CalibrationOptions& options);

  CalibrationResult calibrate(Index series, std::span<const double> grid) const;

  /// Grid built from the full calibration-sample design for this series.
  std::vector<double> default_grid(Index series, Index n_grid = 100, double ratio = 1e-3) const;

  Index windows() const { return static_cast<Index>(windows_.size()); }
  Index calibration_rows() const { return calib_rows_; }
  const LagBasis& basis() const { return basis_; }
  const CalibrationOptions& options() const { return options_; }

 private:
  struct Window {
    Index start = 0;  // first design row of the fit block
    Matrix gram;
    Matrix design;  // only filled when factors are re-estimated per window
    RowVector holdout;
  };

  CalibrationOptions options_;
  Matrix responses_;  // calibration rows p..Tc-1 of every series
  Index calib_rows_ = 0;
  LagBasis basis_;
  std::vector<Window> windows_;
};

CalibrationResult rolling_calibrate(const Panel& panel, Index series, Index r, Index p, Index window,
                                    double calib_frac, std::span<const double> grid,
                                    const CalibrationOptions& extra = {});

inline constexpr double kSelectionRankTolerance = 1e-10;

struct FinalSelection {
  SelectionMask mask;
  LassoFit fit;
  std::vector<Index> dropped;  // columns removed to restore a non-singular Gram
};

/// Active set of the full-sample LASSO fit at `lambda`, pruned (smallest
/// |coefficient| first) until the selected Gram matrix has full rank.
/// `y` must already be aligned with the basis rows.
FinalSelection final_select(const LagBasis& basis, const Vector& y, double lambda, const LassoOptions& options = {},
                            double rank_tol = kSelectionRankTolerance);

/// Convenience form: extracts r factors from the full panel first.
SelectionMask final_select(const Panel& panel, Index series, Index r, Index p, double lambda);

}  // namespace gdfm
