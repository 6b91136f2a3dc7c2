#include "gdfm/inference.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gdfm/csv.hpp"
#include "gdfm/errors.hpp"
#include "gdfm/pca.hpp"
#include "gdfm/stats.hpp"

namespace gdfm {

namespace {

constexpr double kQrThreshold = 1e-10;

Matrix symmetric_inverse(const Matrix& a, const char* what) {
  Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw SingularDesignError(std::string(what) + ": matrix is not positive definite; run gram_rank_check");
  }
  const Matrix inv = ldlt.solve(Matrix::Identity(a.rows(), a.cols()));
  if (!inv.allFinite()) throw SingularDesignError(std::string(what) + ": matrix is singular; run gram_rank_check");
  return inv;
}

std::string format_g(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

OlsFit ols(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw InputError("ols: X and y have different row counts");
  if (x.cols() < 1) throw InputError("ols: design has no columns");
  if (x.rows() < x.cols()) {
    throw SingularDesignError("ols: fewer rows than columns; run gram_rank_check on the selected design");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(kQrThreshold);
  if (qr.rank() < x.cols()) {
    throw SingularDesignError("ols: X'X is numerically singular (rank " + std::to_string(qr.rank()) + " of " +
                              std::to_string(x.cols()) + "); run gram_rank_check on the selected design");
  }
  OlsFit fit;
  fit.beta = qr.solve(y);
  fit.residuals = y - x * fit.beta;
  return fit;
}

Index auto_bandwidth(Index t) {
  return static_cast<Index>(std::floor(4.0 * std::pow(static_cast<double>(t) / 100.0, 2.0 / 9.0)));
}

Matrix hac_avar(const Matrix& x, const Vector& residuals, std::optional<Index> bandwidth) {
  const Index t = x.rows();
  if (residuals.size() != t) throw InputError("hac_avar: residuals do not match the design");
  const Index bw = bandwidth.value_or(auto_bandwidth(t));
  if (bw < 0) throw InputError("hac_avar: bandwidth must be non-negative");
  if (bw >= t) {
    throw InputError("hac_avar: bandwidth " + std::to_string(bw) + " must be below T = " + std::to_string(t));
  }
  const double tt = static_cast<double>(t);
  const Matrix scores = x.array().colwise() * residuals.array();
  Matrix lrv = scores.transpose() * scores / tt;
  for (Index j = 1; j <= bw; ++j) {
    const double w = 1.0 - static_cast<double>(j) / static_cast<double>(bw + 1);
    const Matrix gj = scores.bottomRows(t - j).transpose() * scores.topRows(t - j) / tt;
    lrv += w * (gj + gj.transpose());
  }
  const Matrix ginv = symmetric_inverse(second_moment(x), "hac_avar");
  const Matrix avar = ginv * lrv * ginv;
  return 0.5 * (avar + avar.transpose());
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  if (p < 0.1) return ".";
  return "";
}

double p_value(double t, PValueMode mode) {
  if (mode == PValueMode::one_sided) return stats::normal_sf(std::abs(t));
  return 2.0 * stats::normal_sf(std::abs(t));
}

InferenceResult infer(const ReducedDesign& design, const Vector& y, std::optional<Index> bandwidth,
                      PValueMode mode) {
  const auto fit = ols(design.design, y);
  InferenceResult out;
  out.beta = fit.beta;
  out.residuals = fit.residuals;
  out.t_eff = design.design.rows();
  out.bandwidth = bandwidth.value_or(auto_bandwidth(out.t_eff));
  out.avar = hac_avar(design.design, fit.residuals, out.bandwidth);
  out.se = (out.avar.diagonal().cwiseMax(0.0) / static_cast<double>(out.t_eff)).cwiseSqrt();
  out.t_stats = out.beta.cwiseQuotient(out.se);
  out.p_values.resize(out.beta.size());
  for (Index j = 0; j < out.beta.size(); ++j) {
    out.p_values(j) = p_value(out.t_stats(j), mode);
    out.stars.push_back(significance_stars(out.p_values(j)));
  }
  out.labels = design.labels;
  out.lags = design.lags;
  return out;
}

std::vector<TableRow> t_table(const InferenceResult& result, PValueMode mode) {
  std::vector<TableRow> rows;
  for (Index j = 0; j < result.beta.size(); ++j) {
    TableRow row;
    row.term = j < static_cast<Index>(result.labels.size()) ? result.labels[static_cast<std::size_t>(j)]
                                                            : "x" + std::to_string(j + 1);
    row.estimate = result.beta(j);
    row.std_error = result.se(j);
    row.t_value = result.t_stats(j);
    row.p_value = p_value(row.t_value, mode);
    row.stars = significance_stars(row.p_value);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_coefficient_table(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << "term,Estimate,Std. error,t value,Pr(>|t|),stars\n";
  for (const auto& row : rows) {
    out << csv::escape(row.term) << ',' << format_g(row.estimate, "%.10g") << ',' << format_g(row.std_error, "%.10g")
        << ',' << format_g(row.t_value, "%.10g") << ',' << format_g(row.p_value, "%.6e") << ',' << row.stars << '\n';
  }
  return out.str();
}

void write_coefficient_table(const std::filesystem::path& path, const std::vector<TableRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << format_coefficient_table(rows);
}

WeakFactorTest weak_factor_test(const InferenceResult& result) {
  std::vector<Index> tested;
  for (std::size_t k = 0; k < result.lags.size(); ++k) {
    if (result.lags[k] > 0) tested.push_back(static_cast<Index>(k));
  }
  WeakFactorTest out;
  if (tested.empty()) {
    out.note = "no weak-factor candidates";
    return out;
  }
  const Vector b = result.beta(tested);
  const Matrix v = result.avar(tested, tested);
  const Matrix vinv = symmetric_inverse(v, "weak_factor_test");
  out.defined = true;
  out.dof = static_cast<Index>(tested.size());
  out.statistic = std::max(0.0, static_cast<double>(result.t_eff) * b.dot(vinv * b));
  out.p_value = stats::chi_square_sf(out.statistic, static_cast<double>(out.dof));
  return out;
}

}  // namespace gdfm
