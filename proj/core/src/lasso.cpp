#include "gdfm/lasso.hpp"

#include <algorithm>
#include <cmath>

#include "gdfm/errors.hpp"
#include "gdfm/pca.hpp"

namespace gdfm {

namespace {

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

// One coordinate-descent pass over `coords`; returns the largest change.
// `grad` holds xty - gram * beta and is kept current.
template <typename Coords>
double sweep(const Matrix& gram, Vector& beta, Vector& grad, double lambda, const Coords& coords) {
  double max_change = 0.0;
  for (Index j : coords) {
    const double gjj = gram(j, j);
    if (gjj <= 0.0) continue;
    const double old = beta(j);
    const double updated = soft_threshold(grad(j) + gjj * old, lambda) / gjj;
    if (updated != old) {
      const double delta = updated - old;
      beta(j) = updated;
      grad.noalias() -= delta * gram.col(j);
      max_change = std::max(max_change, std::abs(delta));
    }
  }
  return max_change;
}

struct AllCoords {
  Index n;
  struct It {
    Index i;
    Index operator*() const { return i; }
    It& operator++() {
      ++i;
      return *this;
    }
    bool operator!=(const It& o) const { return i != o.i; }
  };
  It begin() const { return {0}; }
  It end() const { return {n}; }
};

std::vector<Index> nonzero(const Vector& beta) {
  std::vector<Index> out;
  for (Index j = 0; j < beta.size(); ++j) {
    if (beta(j) != 0.0) out.push_back(j);
  }
  return out;
}

// Cholesky factor of gram(order, order), updated one column at a time as
// the active set changes along a path.
class FaceCache {
 public:
  bool sync(const Matrix& gram, const std::vector<Index>& active) {
    std::vector<bool> keep(static_cast<std::size_t>(gram.rows()), false);
    for (Index j : active) keep[static_cast<std::size_t>(j)] = true;
    std::vector<bool> have(keep.size(), false);
    Index removals = 0;
    for (Index j : order_) {
      if (keep[static_cast<std::size_t>(j)]) have[static_cast<std::size_t>(j)] = true;
      else ++removals;
    }
    const auto additions = static_cast<Index>(active.size()) - (static_cast<Index>(order_.size()) - removals);
    if (2 * (removals + additions) > static_cast<Index>(active.size())) return refactor(gram, active);
    for (auto pos = static_cast<Index>(order_.size()) - 1; pos >= 0; --pos) {
      if (!keep[static_cast<std::size_t>(order_[static_cast<std::size_t>(pos)])]) remove(pos);
    }
    for (Index j : active) {
      if (!have[static_cast<std::size_t>(j)] && !append(gram, j)) return refactor(gram, active);
    }
    return true;
  }

  // Solves gram(active, active) x = rhs(active) with x returned in active order.
  Vector solve(const std::vector<Index>& active, const Vector& rhs_active) const {
    const auto m = static_cast<Index>(order_.size());
    Vector rhs(m);
    std::vector<Index> slot(order_.size());
    for (Index a = 0; a < m; ++a) {
      const auto it = std::lower_bound(active.begin(), active.end(), order_[static_cast<std::size_t>(a)]);
      slot[static_cast<std::size_t>(a)] = static_cast<Index>(it - active.begin());
      rhs(a) = rhs_active(slot[static_cast<std::size_t>(a)]);
    }
    const auto l = factor_.topLeftCorner(m, m).triangularView<Eigen::Lower>();
    l.solveInPlace(rhs);
    l.transpose().solveInPlace(rhs);
    Vector out(m);
    for (Index a = 0; a < m; ++a) out(slot[static_cast<std::size_t>(a)]) = rhs(a);
    return out;
  }

 private:
  bool refactor(const Matrix& gram, const std::vector<Index>& active) {
    const auto m = static_cast<Index>(active.size());
    Eigen::LLT<Matrix> llt(gram(active, active));
    order_.clear();
    if (llt.info() != Eigen::Success) return false;
    reserve(m);
    factor_.topLeftCorner(m, m) = llt.matrixL();
    order_ = active;
    return true;
  }

  void reserve(Index m) {
    if (factor_.rows() >= m) return;
    Matrix grown = Matrix::Zero(std::max(m, 2 * factor_.rows()), std::max(m, 2 * factor_.rows()));
    const auto n = static_cast<Index>(order_.size());
    grown.topLeftCorner(n, n) = factor_.topLeftCorner(n, n);
    factor_ = std::move(grown);
  }

  bool append(const Matrix& gram, Index j) {
    const auto m = static_cast<Index>(order_.size());
    Vector cross(m);
    for (Index a = 0; a < m; ++a) cross(a) = gram(order_[static_cast<std::size_t>(a)], j);
    factor_.topLeftCorner(m, m).triangularView<Eigen::Lower>().solveInPlace(cross);
    const double d2 = gram(j, j) - cross.squaredNorm();
    if (!(d2 > 1e-12 * gram(j, j))) return false;
    reserve(m + 1);
    factor_.row(m).head(m) = cross.transpose();
    factor_(m, m) = std::sqrt(d2);
    order_.push_back(j);
    return true;
  }

  // Deletes position `pos`; the trailing block absorbs the removed column
  // through a rank-one update.
  void remove(Index pos) {
    const auto m = static_cast<Index>(order_.size());
    const Index tail = m - pos - 1;
    Vector x = factor_.col(pos).segment(pos + 1, tail);
    for (Index i = pos; i < m - 1; ++i) factor_.row(i).head(pos) = factor_.row(i + 1).head(pos);
    for (Index i = 0; i < tail; ++i) {
      factor_.row(pos + i).segment(pos, i + 1) = factor_.row(pos + 1 + i).segment(pos + 1, i + 1);
    }
    for (Index k = 0; k < tail; ++k) {
      const Index d = pos + k;
      const double lkk = factor_(d, d);
      const double r = std::hypot(lkk, x(k));
      const double c = r / lkk;
      const double s = x(k) / lkk;
      factor_(d, d) = r;
      const Index rest = tail - k - 1;
      if (rest > 0) {
        auto col = factor_.col(d).segment(d + 1, rest);
        col = (col + s * x.segment(k + 1, rest)) / c;
        x.segment(k + 1, rest) = c * x.segment(k + 1, rest) - s * col;
      }
    }
    order_.erase(order_.begin() + pos);
  }

  std::vector<Index> order_;
  Matrix factor_;
};

// Minimizes the objective over the face fixed by the current support and
// signs. Each step moves toward the face minimizer and stops at the first
// coefficient that would change sign, which is dropped; the objective never
// increases. The caller keeps sweeping, so the result is still certified by
// coordinate descent.
bool solve_on_active(const Matrix& gram, const Vector& xty, double lambda, std::vector<Index> active,
                     Vector& beta, FaceCache& cache) {
  bool moved = false;
  while (!active.empty()) {
    const auto k = static_cast<Index>(active.size());
    Vector sign(k);
    for (Index a = 0; a < k; ++a) sign(a) = beta(active[static_cast<std::size_t>(a)]) > 0.0 ? 1.0 : -1.0;
    if (!cache.sync(gram, active)) return moved;
    const Vector target = cache.solve(active, xty(active) - lambda * sign);
    if (!target.allFinite()) return moved;
    const Vector current = beta(active);
    double step = 1.0;
    Index blocking = -1;
    for (Index a = 0; a < k; ++a) {
      if (target(a) * sign(a) > 0.0) continue;
      const double t = current(a) / (current(a) - target(a));
      if (t < step) {
        step = t;
        blocking = a;
      }
    }
    beta(active) = current + step * (target - current);
    moved = true;
    if (blocking < 0) return true;
    beta(active[static_cast<std::size_t>(blocking)]) = 0.0;
    active.erase(active.begin() + blocking);
  }
  return moved;
}

}  // namespace

double lasso_kkt_violation(const Matrix& gram, const Vector& xty, const Vector& beta, double lambda) {
  const Vector grad = xty - gram * beta;
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    if (gram(j, j) <= 0.0) continue;
    const double v = beta(j) != 0.0 ? std::abs(grad(j) - lambda * (beta(j) > 0 ? 1.0 : -1.0))
                                    : std::max(0.0, std::abs(grad(j)) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

namespace {

LassoFit solve_gram(const Matrix& gram, const Vector& xty, double lambda, const Vector& warm_start,
                    const LassoOptions& options, FaceCache& cache) {
  const Index k = gram.rows();
  if (gram.cols() != k || xty.size() != k) throw InputError("lasso: gram / xty dimension mismatch");
  if (!(lambda >= 0.0)) throw InputError("lasso: penalty must be non-negative");

  LassoFit fit;
  fit.penalty = lambda;
  fit.coefficients = warm_start.size() == k ? warm_start : Vector::Zero(k);
  Vector grad = xty - gram * fit.coefficients;

  long sweeps = 0;
  bool converged = false;
  while (sweeps < options.max_sweeps) {
    ++sweeps;
    const double full_change = sweep(gram, fit.coefficients, grad, lambda, AllCoords{k});
    if (full_change < options.tolerance) {
      converged = true;
      break;
    }
    const auto active = nonzero(fit.coefficients);
    if (options.active_set_solve && solve_on_active(gram, xty, lambda, active, fit.coefficients, cache)) {
      grad = xty - gram * fit.coefficients;
      continue;
    }
    // iterate on the current active set until it settles, then re-check all
    while (sweeps < options.max_sweeps) {
      ++sweeps;
      if (sweep(gram, fit.coefficients, grad, lambda, active) < options.tolerance) break;
    }
  }
  fit.sweeps = sweeps;
  fit.kkt_violation = lasso_kkt_violation(gram, xty, fit.coefficients, lambda);
  if (!converged) {
    throw ConvergenceError("lasso: no convergence after " + std::to_string(options.max_sweeps) +
                               " sweeps (KKT violation " + std::to_string(fit.kkt_violation) + ")",
                           fit.kkt_violation);
  }
  fit.active_set = nonzero(fit.coefficients);
  return fit;
}

}  // namespace

LassoFit lasso_solve_gram(const Matrix& gram, const Vector& xty, double lambda, const Vector& warm_start,
                          const LassoOptions& options) {
  FaceCache cache;
  return solve_gram(gram, xty, lambda, warm_start, options, cache);
}

LassoFit lasso_solve(const Matrix& x, const Vector& y, double lambda, const LassoOptions& options) {
  if (x.rows() != y.size()) throw InputError("lasso: X and y have different row counts");
  if (x.rows() < 1) throw InputError("lasso: empty design");
  const double t = static_cast<double>(x.rows());
  const Matrix gram = second_moment(x);
  const Vector xty = x.transpose() * y / t;
  return lasso_solve_gram(gram, xty, lambda, {}, options);
}

double lasso_lambda_max(const Vector& xty) { return xty.size() ? xty.cwiseAbs().maxCoeff() : 0.0; }

std::vector<double> penalty_grid_from_max(double lambda_max, Index n_grid, double ratio) {
  if (n_grid < 2) throw InputError("penalty_grid: need at least 2 grid points");
  if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("penalty_grid: ratio must lie in (0, 1)");
  std::vector<double> grid(static_cast<std::size_t>(n_grid));
  const double step = std::log(ratio) / static_cast<double>(n_grid - 1);
  grid[0] = lambda_max;
  for (Index i = 1; i < n_grid; ++i) grid[static_cast<std::size_t>(i)] = lambda_max * std::exp(step * static_cast<double>(i));
  grid.back() = lambda_max * ratio;
  return grid;
}

std::vector<double> penalty_grid(const Matrix& x, const Vector& y, Index n_grid, double ratio) {
  if (x.rows() != y.size() || x.rows() < 1) throw InputError("penalty_grid: X and y do not match");
  const Vector xty = x.transpose() * y / static_cast<double>(x.rows());
  return penalty_grid_from_max(lasso_lambda_max(xty), n_grid, ratio);
}

std::vector<LassoFit> lasso_path_gram(const Matrix& gram, const Vector& xty, std::span<const double> grid,
                                      const LassoOptions& options) {
  std::vector<LassoFit> path;
  path.reserve(grid.size());
  Vector warm;
  FaceCache cache;
  for (double lambda : grid) {
    path.push_back(solve_gram(gram, xty, lambda, warm, options, cache));
    warm = path.back().coefficients;
  }
  return path;
}

RollingCalibrator::RollingCalibrator(const Matrix& panel_values, const CalibrationOptions& options)
    : options_(options) {
  const Index T = panel_values.rows();
  const Index p = options.p;
  if (!(options.calib_frac > 0.0 && options.calib_frac <= 1.0)) {
    throw InputError("calibration fraction must lie in (0, 1]");
  }
  if (options.stride < 1) throw InputError("window stride must be positive");
  calib_rows_ = static_cast<Index>(std::floor(options.calib_frac * static_cast<double>(T)));
  const Index usable = calib_rows_ - p;
  if (options.window < 2) throw InputError("window must hold at least 2 observations");
  if (usable < options.window) {
    throw InputError("window of " + std::to_string(options.window) + " exceeds the " + std::to_string(usable) +
                     " usable calibration rows (calibration set " + std::to_string(calib_rows_) + " rows, p = " +
                     std::to_string(p) + ")");
  }

  const Matrix calib = panel_values.topRows(calib_rows_);
  const auto factors = extract_factors(calib, options.r);
  basis_ = build_lag_matrix(factors.factors, p);
  responses_ = calib.bottomRows(usable);

  const Index fit_rows = options.window - 1;
  for (Index start = 0; start + options.window <= usable; start += options.stride) {
    Window w;
    w.start = start;
    if (options.reestimate_per_window) {
      // PCA on the panel rows feeding the fit block; the held-out row is
      // projected with the same compression.
      const Matrix rows = calib.middleRows(start, p + options.window);
      const auto local = extract_factors(rows.topRows(p + fit_rows), options.r);
      const Matrix f = rows * local.compression.transpose();
      const auto local_basis = build_lag_matrix(f, p);
      w.design = local_basis.design.topRows(fit_rows);
      w.holdout = local_basis.design.row(fit_rows);
      w.gram = second_moment(w.design);
    } else {
      w.gram = second_moment(basis_.design.middleRows(start, fit_rows));
      w.holdout = basis_.design.row(start + fit_rows);
    }
    windows_.push_back(std::move(w));
  }
}

std::vector<double> RollingCalibrator::default_grid(Index series, Index n_grid, double ratio) const {
  if (series < 0 || series >= responses_.cols()) throw InputError("series index out of range");
  return penalty_grid(basis_.design, responses_.col(series), n_grid, ratio);
}

CalibrationResult RollingCalibrator::calibrate(Index series, std::span<const double> grid) const {
  if (series < 0 || series >= responses_.cols()) throw InputError("series index out of range");
  if (grid.empty()) throw InputError("calibration grid is empty");
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (grid[g] > grid[g - 1]) throw InputError("calibration grid must be descending");
  }

  const Index fit_rows = options_.window - 1;
  const auto ng = grid.size();
  CalibrationResult result;
  result.penalty_grid.assign(grid.begin(), grid.end());
  result.labels = basis_.labels;
  std::vector<double> sse(ng, 0.0);
  std::vector<std::vector<std::vector<Index>>> active(windows_.size());

  const Vector y = responses_.col(series);
  for (std::size_t w = 0; w < windows_.size(); ++w) {
    const auto& win = windows_[w];
    const auto fit_block = options_.reestimate_per_window ? win.design.topRows(fit_rows)
                                                          : basis_.design.middleRows(win.start, fit_rows);
    const Vector xty = fit_block.transpose() * y.segment(win.start, fit_rows) / static_cast<double>(fit_rows);
    const double target = y(win.start + fit_rows);
    const auto path = lasso_path_gram(win.gram, xty, grid, options_.lasso);

    Index previous = -1;
    bool violated = false;
    for (std::size_t g = 0; g < ng; ++g) {
      const double err = target - win.holdout.dot(path[g].coefficients);
      sse[g] += err * err;
      const auto size = static_cast<Index>(path[g].active_set.size());
      if (size < previous) violated = true;
      previous = size;
      active[w].push_back(path[g].active_set);
    }
    if (violated) ++result.monotonicity_violations;
    result.holdout_rows.push_back(calib_rows_ - responses_.rows() + win.start + fit_rows);
  }

  const double count = static_cast<double>(windows_.size());
  result.mse_per_penalty.resize(ng);
  for (std::size_t g = 0; g < ng; ++g) result.mse_per_penalty[g] = sse[g] / count;
  const auto best = std::min_element(result.mse_per_penalty.begin(), result.mse_per_penalty.end());
  result.optimal_index = static_cast<Index>(best - result.mse_per_penalty.begin());
  result.optimal_penalty = grid[static_cast<std::size_t>(result.optimal_index)];
  for (auto& per_window : active) {
    result.window_selections.push_back(std::move(per_window[static_cast<std::size_t>(result.optimal_index)]));
  }
  return result;
}

CalibrationResult rolling_calibrate(const Panel& panel, Index series, Index r, Index p, Index window,
                                    double calib_frac, std::span<const double> grid,
                                    const CalibrationOptions& extra) {
  CalibrationOptions options = extra;
  options.r = r;
  options.p = p;
  options.window = window;
  options.calib_frac = calib_frac;
  RollingCalibrator calibrator(panel.values, options);
  return calibrator.calibrate(series, grid);
}

FinalSelection final_select(const LagBasis& basis, const Vector& y, double lambda, const LassoOptions& options,
                            double rank_tol) {
  if (y.size() != basis.rows()) throw InputError("final_select: response is not aligned with the lag basis");
  const double t = static_cast<double>(basis.rows());
  const Matrix gram = second_moment(basis.design);
  const Vector xty = basis.design.transpose() * y / t;

  FinalSelection out;
  out.fit = lasso_solve_gram(gram, xty, lambda, {}, options);
  if (out.fit.active_set.empty()) {
    throw EmptySelectionError("final_select: LASSO at lambda = " + std::to_string(lambda) +
                     " selects no column; use a smaller penalty");
  }
  std::vector<Index> chosen = out.fit.active_set;
  while (true) {
    const auto report = gram_rank_check_gram(gram(chosen, chosen), rank_tol);
    if (report.full_rank) break;
    auto weakest = std::min_element(chosen.begin(), chosen.end(), [&](Index a, Index b) {
      return std::abs(out.fit.coefficients(a)) < std::abs(out.fit.coefficients(b));
    });
    out.dropped.push_back(*weakest);
    chosen.erase(weakest);
  }
  out.mask = SelectionMask::none(basis.columns());
  for (Index c : chosen) out.mask.selected[static_cast<std::size_t>(c)] = true;
  return out;
}

SelectionMask final_select(const Panel& panel, Index series, Index r, Index p, double lambda) {
  if (series < 0 || series >= panel.num_series()) throw InputError("final_select: series index out of range");
  const auto factors = extract_factors(panel.values, r);
  const auto basis = build_lag_matrix(factors.factors, p);
  const Vector y = panel.values.col(series).tail(basis.rows());
  return final_select(basis, y, lambda).mask;
}

}  // namespace gdfm
