#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gdfm/lag_design.hpp"
#include "gdfm/types.hpp"

namespace gdfm {

struct OlsFit {
  Vector beta;
  Vector residuals;
};

/// Least squares through a column-pivoted QR. Throws SingularDesignError
/// when X'X is numerically singular.
OlsFit ols(const Matrix& x, const Vector& y);

/// floor(4 (T / 100)^(2/9)).
Index auto_bandwidth(Index t);

/// Sandwich estimate Gx^{-1} S Gx^{-1} of the asymptotic variance of
/// sqrt(T)(beta_hat - beta), where Gx = X'X / T and S is the Newey-West
/// (Bartlett) long-run variance of the scores x_t * residual_t.
/// No bandwidth means the automatic choice.
Matrix hac_avar(const Matrix& x, const Vector& residuals, std::optional<Index> bandwidth = std::nullopt);

enum class PValueMode { two_sided, one_sided };

struct InferenceResult {
  Vector beta;
  Vector residuals;
  Matrix avar;
  Vector se;
  Vector t_stats;
  Vector p_values;
  std::vector<std::string> stars;
  std::vector<std::string> labels;
  std::vector<Index> lags;
  Index t_eff = 0;
  Index bandwidth = 0;
};

InferenceResult infer(const ReducedDesign& design, const Vector& y, std::optional<Index> bandwidth = std::nullopt,
                      PValueMode mode = PValueMode::two_sided);

/// "***" below 0.001, "**" below 0.01, "*" below 0.05, "." below 0.1.
std::string significance_stars(double p);

double p_value(double t, PValueMode mode);

struct TableRow {
  std::string term;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_value = 0.0;
  double p_value = 0.0;
  std::string stars;
};

/// One row per coefficient. The p-values are recomputed under `mode`.
std::vector<TableRow> t_table(const InferenceResult& result, PValueMode mode = PValueMode::two_sided);

/// CSV with header term,Estimate,Std. error,t value,Pr(>|t|),stars.
void write_coefficient_table(const std::filesystem::path& path, const std::vector<TableRow>& rows);
std::string format_coefficient_table(const std::vector<TableRow>& rows);

struct WeakFactorTest {
  bool defined = false;
  double statistic = 0.0;
  Index dof = 0;
  double p_value = 1.0;
  std::string note;  // "no weak-factor candidates" when undefined
};

/// Joint Wald test that every lag > 0 coefficient is zero.
WeakFactorTest weak_factor_test(const InferenceResult& result);

}  // namespace gdfm
