#pragma once

#include <vector>

#include "gdfm/panel.hpp"
#include "gdfm/types.hpp"

namespace gdfm {

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// stored as columns.
struct SymEigen {
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// Full decomposition of a symmetric matrix. The input is symmetrized as
/// (A + A') / 2 first. Equal eigenvalues keep the solver's relative order.
SymEigen sym_eigen(const Matrix& a);

/// Normalized principal-component map for a covariance matrix.
///
/// `compression` is K = M^{-1/2} P (r x n), `loadings` is P' M^{1/2} (n x r).
/// Eigenvector signs are chosen so that loadings(j, j) > 0 for j < r; when
/// that entry is exactly zero the first nonzero entry of the eigenvector is
/// made positive instead, and the column index is listed in `sign_fallbacks`.
struct PCMap {
  Matrix compression;
  Matrix loadings;
  Vector eigenvalues;
  std::vector<Index> sign_fallbacks;
};

/// Relative tolerance below which mu_r / mu_1 counts as rank deficient.
inline constexpr double kPcRankTolerance = 1e-12;

PCMap pc_map(const Matrix& gamma, Index r);

/// Static factor estimate: factors (T x r) = Y K', with identity sample
/// second moment.
struct FactorEstimate {
  Matrix factors;
  Matrix loadings;
  Matrix compression;
  Vector eigenvalues;  // full spectrum of the sample second-moment matrix
  std::vector<Index> sign_fallbacks;

  Index r() const { return factors.cols(); }
};

/// Uncentred sample second moment Y'Y / T.
Matrix second_moment(const Matrix& y);

/// Normalized principal components of the rows of `y` (T x n). The panel is
/// taken as zero mean; no re-centering happens here.
FactorEstimate extract_factors(const Matrix& y, Index r);
FactorEstimate extract_factors(const Panel& panel, Index r);

enum class FactorCriterion { icp1, icp2, icp3 };

struct FactorCountResult {
  Index selected = 0;
  std::vector<double> criterion;  // index r = 0..r_max
  std::vector<double> residual_variance;
};

/// Bai-Ng information criterion over r = 0..r_max (ICp2 by default).
/// V(r) is the mean squared residual after removing r principal components.
FactorCountResult estimate_num_factors(const Matrix& y, Index r_max,
                                       FactorCriterion criterion = FactorCriterion::icp2);
FactorCountResult estimate_num_factors(const Panel& panel, Index r_max,
                                       FactorCriterion criterion = FactorCriterion::icp2);

}  // namespace gdfm
