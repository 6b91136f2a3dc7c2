#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "gdfm/types.hpp"

namespace gdfm {

/// Linear state-space generator
///   x_{t+1} = M x_t + G_bar eps_{t+1},   chi_t = H x_t,   y_t = chi_t + xi_t.
/// The state is partitioned as (F, F_w, x_rest) with sizes r, w and
/// m - r - w; H rows are (Lambda_i, Lambda_w_i, 0).
///
/// Each idiosyncratic series is u_it = rho_i u_i,t-1 + nu_it with nu_it of
/// standard deviation innovation_sd_i, mixed with its left neighbour as
/// xi_it = (u_it + c u_i-1,t) / sqrt(1 + c^2).
struct StateSpaceModel {
  std::string name;
  Matrix M;
  Matrix G_bar;
  Matrix H;
  Index r = 0;
  Index q = 0;
  Index m = 0;
  Index w = 0;
  Vector rho;
  Vector innovation_sd;
  double coupling = 0.0;
  bool normalized = false;
  std::vector<Index> weak_series;    // designated series with weak loadings
  std::vector<Index> lagged_series;  // series whose chi is a pure lag F_1,t-1

  Index n() const { return H.rows(); }
  Matrix strong_loadings() const { return H.leftCols(r); }
  void validate() const;
};

double spectral_radius(const Matrix& m);

/// Solves S = M S M' + Q through (I - M kron M) vec S = vec Q.
Matrix lyapunov(const Matrix& m, const Matrix& q);

/// Stationary state covariance.
Matrix state_covariance(const StateSpaceModel& model);

/// Changes state coordinates so that Var(F) = I_r and Cov(F, F_w) = 0.
/// Loadings, if present, are carried along so chi is unchanged.
StateSpaceModel normalize(const StateSpaceModel& model);

struct MiniphaseResult {
  bool pass = true;
  std::complex<double> z;  // first violating point when !pass
  Index rank = 0;
  Index required = 0;      // m + q
};

/// Rank of [I - M z, -G_bar; I_r, 0] over a polar grid of grid_size^2 points
/// with radius below 1 - 1e-3, plus the exact rank-drop points of the
/// reduced pencil inside the disk.
MiniphaseResult check_miniphase(const StateSpaceModel& model, Index grid_size = 50);

struct LoadingSpec {
  Vector strong_scale;           // target diagonal of Lambda'Lambda / n
  double loading_bound = 1.0;    // raw draws are uniform on [-bound, bound]
  Index weak_pairs = 10;
  double weak_share = 0.4;       // population share of e_chi in var(y)
  Index lagged_series = 2;
  double rho = 0.5;
  double coupling = 0.2;
};

/// Draws loadings for n series on a normalized model. Designated weak
/// series come in pairs with equal strong and opposite weak loadings, so
/// Lambda' Lambda_w = 0; their weak loadings point along the top eigenvector
/// of Var(F_w) and are scaled to the requested population share.
StateSpaceModel attach_loadings(const StateSpaceModel& dynamics, Index n, const LoadingSpec& spec,
                                std::uint64_t loading_seed);

struct SimulatedPanel {
  Matrix y;
  Matrix chi;
  Matrix common;  // C
  Matrix weak;    // e_chi
  Matrix xi;
  Matrix F;
  Matrix F_w;
  Matrix eps;
  Matrix state;
  std::uint64_t seed = 0;
};

SimulatedPanel simulate(const StateSpaceModel& model, Index T, std::uint64_t seed, Index burn_in = 500);

/// Coefficients expressing the projection of F_j,t-l on the state x_t.
RowVector lag_loading(const StateSpaceModel& model, Index factor, Index lag);

/// Population second moment of (F_t', ..., F_t-p')' in lag-design column
/// order.
Matrix population_lag_gram(const StateSpaceModel& model, Index p);

/// Population E[x_t chi_it] over the same columns.
Vector population_lag_cross(const StateSpaceModel& model, Index series, Index p);

/// Pseudo-true coefficients of chi_i on the selected lag columns.
Vector pseudo_true_beta(const StateSpaceModel& model, Index series, Index p, const std::vector<Index>& columns);

/// Columns kept greedily in design order while the population Gram stays
/// non-singular at relative tolerance `tol`.
std::vector<Index> oracle_basis(const StateSpaceModel& model, Index p, double tol = 1e-10);

struct PopulationShares {
  Vector common;
  Vector weak;
  Vector chi;
  Vector xi;
  Vector total;
};

PopulationShares population_shares(const StateSpaceModel& model);

/// Population variance of each idiosyncratic series.
Vector idiosyncratic_variance(const StateSpaceModel& model);

}  // namespace gdfm
