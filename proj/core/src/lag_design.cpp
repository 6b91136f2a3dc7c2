#include "gdfm/lag_design.hpp"

#include <algorithm>
#include <charconv>

#include "gdfm/errors.hpp"
#include "gdfm/pca.hpp"

namespace gdfm {

std::string lag_label(Index factor, Index lag) {
  return "F" + std::to_string(factor + 1) + "_L" + std::to_string(lag);
}

bool parse_lag_label(std::string_view label, Index& factor, Index& lag) {
  if (label.size() < 5 || label.front() != 'F') return false;
  const auto sep = label.find("_L");
  if (sep == std::string_view::npos) return false;
  long f = 0, l = 0;
  const auto fs = label.substr(1, sep - 1);
  const auto ls = label.substr(sep + 2);
  auto r1 = std::from_chars(fs.data(), fs.data() + fs.size(), f);
  auto r2 = std::from_chars(ls.data(), ls.data() + ls.size(), l);
  if (r1.ec != std::errc() || r1.ptr != fs.data() + fs.size()) return false;
  if (r2.ec != std::errc() || r2.ptr != ls.data() + ls.size()) return false;
  if (f < 1 || l < 0) return false;
  factor = f - 1;
  lag = l;
  return true;
}

LagBasis build_lag_matrix(const Matrix& factors, Index p) {
  const Index T = factors.rows();
  const Index r = factors.cols();
  if (p < 0) throw InputError("build_lag_matrix: lag order must be non-negative");
  if (p >= T) throw InputError("build_lag_matrix: lag order " + std::to_string(p) + " >= T = " + std::to_string(T));
  if (r < 1) throw InputError("build_lag_matrix: no factors");

  LagBasis basis;
  basis.lags = p;
  basis.factors = r;
  basis.design.resize(T - p, r * (p + 1));
  for (Index l = 0; l <= p; ++l) {
    basis.design.middleCols(l * r, r) = factors.middleRows(p - l, T - p);
    for (Index j = 0; j < r; ++j) basis.labels.push_back(lag_label(j, l));
  }
  return basis;
}

SelectionMask SelectionMask::all(Index columns) {
  return {std::vector<bool>(static_cast<std::size_t>(columns), true)};
}

SelectionMask SelectionMask::none(Index columns) {
  return {std::vector<bool>(static_cast<std::size_t>(columns), false)};
}

SelectionMask SelectionMask::contemporaneous(Index factors, Index lags) {
  auto mask = none(factors * (lags + 1));
  for (Index j = 0; j < factors; ++j) mask.selected[static_cast<std::size_t>(j)] = true;
  return mask;
}

SelectionMask SelectionMask::from_labels(const LagBasis& basis, const std::vector<std::string>& labels) {
  auto mask = none(basis.columns());
  for (const auto& label : labels) {
    Index f = 0, l = 0;
    if (!parse_lag_label(label, f, l) || f >= basis.factors || l > basis.lags) {
      throw InputError("unknown basis label '" + label + "'");
    }
    mask.selected[static_cast<std::size_t>(basis.column(f, l))] = true;
  }
  return mask;
}

Index SelectionMask::count() const {
  return static_cast<Index>(std::count(selected.begin(), selected.end(), true));
}

std::vector<Index> SelectionMask::indices() const {
  std::vector<Index> out;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    if (selected[k]) out.push_back(static_cast<Index>(k));
  }
  return out;
}

ReducedDesign apply_mask(const LagBasis& basis, const SelectionMask& mask) {
  if (static_cast<Index>(mask.selected.size()) != basis.columns()) {
    throw InputError("apply_mask: mask length " + std::to_string(mask.selected.size()) +
                     " does not match r(p+1) = " + std::to_string(basis.columns()));
  }
  ReducedDesign out;
  out.columns = mask.indices();
  if (out.columns.empty()) throw InputError("apply_mask: empty selection");
  out.design = basis.design(Eigen::all, out.columns);
  for (Index c : out.columns) {
    out.labels.push_back(basis.labels[static_cast<std::size_t>(c)]);
    out.lags.push_back(c / basis.factors);
  }
  return out;
}

RankReport gram_rank_check_gram(const Matrix& gram, double tol_rel) {
  const auto eig = sym_eigen(gram);
  const Index k = gram.rows();
  const double cutoff = tol_rel * std::max(eig.eigenvalues(0), 0.0);
  RankReport report;
  report.eigenvalues = eig.eigenvalues;
  report.rank = (eig.eigenvalues.array() > cutoff).count();
  if (!(eig.eigenvalues(0) > 0.0)) report.rank = 0;
  report.full_rank = report.rank == k;
  report.kernel = eig.eigenvectors.rightCols(k - report.rank);
  return report;
}

RankReport gram_rank_check(const Matrix& x, double tol_rel) {
  if (x.cols() < 1) throw InputError("gram_rank_check: design has no columns");
  if (x.rows() < 1) throw InputError("gram_rank_check: design has no rows");
  return gram_rank_check_gram(second_moment(x), tol_rel);
}

}  // namespace gdfm
