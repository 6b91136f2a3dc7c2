#include "gdfm/pca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gdfm/errors.hpp"

namespace gdfm {

SymEigen sym_eigen(const Matrix& a) {
  if (a.rows() != a.cols()) throw InputError("sym_eigen: matrix must be square");
  if (a.size() == 0) throw InputError("sym_eigen: empty matrix");
  if (!a.allFinite()) throw InputError("sym_eigen: non-finite entries");

  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("sym_eigen: solver did not converge");

  const Index k = a.rows();
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  const auto& values = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Index lhs, Index rhs) { return values(lhs) > values(rhs); });

  SymEigen out{Vector(k), Matrix(k, k)};
  for (Index j = 0; j < k; ++j) {
    out.eigenvalues(j) = values(order[static_cast<std::size_t>(j)]);
    out.eigenvectors.col(j) = solver.eigenvectors().col(order[static_cast<std::size_t>(j)]);
  }
  return out;
}

PCMap pc_map(const Matrix& gamma, Index r) {
  const Index n = gamma.rows();
  if (r < 1 || r > n) throw InputError("pc_map: need 1 <= r <= n (r = " + std::to_string(r) + ")");

  auto eig = sym_eigen(gamma);
  const double top = eig.eigenvalues(0);
  const double tol = kPcRankTolerance * std::max(top, 0.0);
  if (!(top > 0.0) || eig.eigenvalues(r - 1) <= tol) {
    const auto rank = (eig.eigenvalues.array() > tol).count();
    throw RankDeficiencyError("pc_map: covariance has numerical rank " + std::to_string(rank) +
                                  " < r = " + std::to_string(r),
                              static_cast<long>(rank));
  }

  PCMap out;
  out.eigenvalues = eig.eigenvalues.head(r);
  Matrix p = eig.eigenvectors.leftCols(r);  // columns are P' (n x r)
  for (Index j = 0; j < r; ++j) {
    double pivot = j < n ? p(j, j) : 0.0;
    if (pivot == 0.0) {
      out.sign_fallbacks.push_back(j);
      for (Index i = 0; i < n; ++i) {
        if (p(i, j) != 0.0) {
          pivot = p(i, j);
          break;
        }
      }
    }
    if (pivot < 0.0) p.col(j) = -p.col(j);
  }
  const Vector root = out.eigenvalues.cwiseSqrt();
  out.loadings = p * root.asDiagonal();
  out.compression = root.cwiseInverse().asDiagonal() * p.transpose();
  return out;
}

Matrix second_moment(const Matrix& y) {
  const Index n = y.cols();
  Matrix g = Matrix::Zero(n, n);
  g.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose(), 1.0 / static_cast<double>(y.rows()));
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

FactorEstimate extract_factors(const Matrix& y, Index r) {
  if (r < 1) throw InputError("extract_factors: r must be at least 1");
  if (r > std::min(y.rows(), y.cols())) {
    throw InputError("extract_factors: r = " + std::to_string(r) + " exceeds min(n, T)");
  }
  if (!y.allFinite()) throw InputError("extract_factors: panel has missing values");

  const Matrix gamma = second_moment(y);
  auto map = pc_map(gamma, r);
  FactorEstimate out;
  out.factors = y * map.compression.transpose();
  out.loadings = std::move(map.loadings);
  out.compression = std::move(map.compression);
  out.eigenvalues = sym_eigen(gamma).eigenvalues;
  out.sign_fallbacks = std::move(map.sign_fallbacks);
  return out;
}

FactorEstimate extract_factors(const Panel& panel, Index r) { return extract_factors(panel.values, r); }

FactorCountResult estimate_num_factors(const Matrix& y, Index r_max, FactorCriterion criterion) {
  const Index T = y.rows();
  const Index n = y.cols();
  const Index cap = std::min(n, T) / 2;
  if (r_max < 1 || r_max > cap) {
    throw InputError("estimate_num_factors: r_max must lie in 1..min(n,T)/2 = " + std::to_string(cap));
  }
  if (!y.allFinite()) throw InputError("estimate_num_factors: panel has missing values");

  const Vector mu = sym_eigen(second_moment(y)).eigenvalues.cwiseMax(0.0);
  const double nn = static_cast<double>(n);
  const double tt = static_cast<double>(T);
  const double c2 = static_cast<double>(std::min(n, T));
  double penalty = 0.0;
  switch (criterion) {
    case FactorCriterion::icp1:
      penalty = (nn + tt) / (nn * tt) * std::log(nn * tt / (nn + tt));
      break;
    case FactorCriterion::icp2:
      penalty = (nn + tt) / (nn * tt) * std::log(c2);
      break;
    case FactorCriterion::icp3:
      penalty = std::log(c2) / c2;
      break;
  }

  FactorCountResult out;
  double best = std::numeric_limits<double>::infinity();
  for (Index r = 0; r <= r_max; ++r) {
    const double v = mu.tail(mu.size() - r).sum() / nn;
    const double ic = std::log(v) + static_cast<double>(r) * penalty;
    out.residual_variance.push_back(v);
    out.criterion.push_back(ic);
    if (ic < best) {
      best = ic;
      out.selected = r;
    }
  }
  return out;
}

FactorCountResult estimate_num_factors(const Panel& panel, Index r_max, FactorCriterion criterion) {
  return estimate_num_factors(panel.values, r_max, criterion);
}

}  // namespace gdfm
