#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gdfm/types.hpp"

namespace gdfm {

struct StaticComponent {
  Matrix common;    // C_hat = F_hat Lambda_hat'
  Matrix loadings;  // n x r
};

/// Least-squares loadings of every column of `y` on `factors` (same rows).
StaticComponent static_cc(const Matrix& y, const Matrix& factors);

Matrix weak_cc(const Matrix& chi_hat, const Matrix& c_hat);

/// y = C + e_chi + xi on the T_eff rows shared by every series.
struct Decomposition {
  Matrix y;
  Matrix chi;
  Matrix common;  // C_hat
  Matrix weak;    // e_chi_hat
  Matrix xi;
  std::vector<std::string> series_ids;
  std::vector<std::string> time_index;
};

/// C_hat is the projection of chi_hat on the span of a constant and
/// `factors` (the lag-0 block of the design), so e_chi_hat has zero mean and
/// zero sample covariance with every factor.
Decomposition decompose(const Matrix& y, const Matrix& factors, const Matrix& chi_hat);

struct VarianceShare {
  std::string series;
  double share_common = 0.0;
  double share_weak = 0.0;
  double share_chi = 0.0;
  double share_xi = 0.0;
  double cov_common_weak = 0.0;  // cross terms, scaled by var(y)
  double cov_chi_xi = 0.0;
};

/// Sample-variance ratios var(part) / var(y), denominator T_eff. Shares need
/// not add up to one; the scaled cross covariances account for the gap.
std::vector<VarianceShare> variance_shares(const Decomposition& d);

/// Writes C_hat.csv, e_chi_hat.csv, chi_hat.csv, xi_hat.csv and shares.csv.
void write_decomposition(const std::filesystem::path& dir, const Decomposition& d);
void write_shares(const std::filesystem::path& path, const std::vector<VarianceShare>& shares);

}  // namespace gdfm
