#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gdfm/types.hpp"

namespace gdfm {

/// Stacked lag regressors. Row t holds (F_{t+p}', F_{t+p-1}', ..., F_t') of
/// the source factor matrix, so design row t is aligned with panel row t + p.
/// Column l * r + j is factor j at lag l and is labelled "F{j+1}_L{l}".
struct LagBasis {
  Matrix design;
  Index lags = 0;
  Index factors = 0;
  std::vector<std::string> labels;

  Index columns() const { return design.cols(); }
  Index rows() const { return design.rows(); }
  Index column(Index factor, Index lag) const { return lag * factors + factor; }
};

std::string lag_label(Index factor, Index lag);

/// Parses "F{j}_L{l}" into zero-based factor index and lag. Returns false on
/// malformed labels.
bool parse_lag_label(std::string_view label, Index& factor, Index& lag);

LagBasis build_lag_matrix(const Matrix& factors, Index p);

/// Per-variable column selection over the r(p+1) stacked columns.
struct SelectionMask {
  std::vector<bool> selected;

  static SelectionMask all(Index columns);
  static SelectionMask none(Index columns);
  /// Only the lag-0 block.
  static SelectionMask contemporaneous(Index factors, Index lags);
  static SelectionMask from_labels(const LagBasis& basis, const std::vector<std::string>& labels);

  Index count() const;
  std::vector<Index> indices() const;
  bool empty() const { return count() == 0; }
};

struct ReducedDesign {
  Matrix design;
  std::vector<std::string> labels;
  std::vector<Index> columns;  // positions in the full basis
  std::vector<Index> lags;     // lag of each selected column
};

ReducedDesign apply_mask(const LagBasis& basis, const SelectionMask& mask);

inline constexpr double kDefaultRankTolerance = 1e-10;

/// Numerical rank of the Gram matrix X'X / rows. Eigenvalues at or below
/// tol_rel times the largest span the numerical kernel, returned as
/// orthonormal columns.
struct RankReport {
  bool full_rank = true;
  Index rank = 0;
  Vector eigenvalues;
  Matrix kernel;
};

RankReport gram_rank_check(const Matrix& x, double tol_rel = kDefaultRankTolerance);

/// Same check on a precomputed symmetric Gram matrix.
RankReport gram_rank_check_gram(const Matrix& gram, double tol_rel = kDefaultRankTolerance);

}  // namespace gdfm
