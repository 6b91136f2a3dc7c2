#include "gdfm/simulator.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gdfm/errors.hpp"
#include "gdfm/pca.hpp"

namespace gdfm {

namespace {

constexpr double kPinvTolerance = 1e-10;
constexpr double kMiniphaseTolerance = 1e-10;

Matrix sym_pinv(const Matrix& a) {
  const auto eig = sym_eigen(a);
  const double cutoff = kPinvTolerance * std::max(eig.eigenvalues(0), 0.0);
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Index j = 0; j < a.rows(); ++j) {
    const double mu = eig.eigenvalues(j);
    if (mu > cutoff) out += eig.eigenvectors.col(j) * eig.eigenvectors.col(j).transpose() / mu;
  }
  return out;
}

Matrix sym_sqrt(const Matrix& a, bool inverse) {
  const auto eig = sym_eigen(a);
  Vector d = eig.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  if (inverse) d = d.cwiseInverse();
  return eig.eigenvectors * d.asDiagonal() * eig.eigenvectors.transpose();
}

Matrix matrix_power(const Matrix& m, Index l) {
  Matrix out = Matrix::Identity(m.rows(), m.cols());
  for (Index k = 0; k < l; ++k) out = m * out;
  return out;
}

Index numerical_rank(const Eigen::MatrixXcd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || !(s(0) > 0.0)) return 0;
  return (s.array() > kMiniphaseTolerance * s(0)).count();
}

Eigen::MatrixXcd miniphase_matrix(const StateSpaceModel& model, std::complex<double> z) {
  const Index m = model.m, q = model.q, r = model.r;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(m + r, m + q);
  out.topLeftCorner(m, m) = Eigen::MatrixXcd::Identity(m, m) - z * model.M.cast<std::complex<double>>();
  out.topRightCorner(m, q) = -model.G_bar.cast<std::complex<double>>();
  out.bottomLeftCorner(r, r) = Eigen::MatrixXcd::Identity(r, r);
  return out;
}

}  // namespace

void StateSpaceModel::validate() const {
  if (r < 1 || q < 1 || m < r + w || w < 0) throw InputError("state-space model: inconsistent dimensions");
  if (M.rows() != m || M.cols() != m) throw InputError("state-space model: M must be m x m");
  if (G_bar.rows() != m || G_bar.cols() != q) throw InputError("state-space model: G_bar must be m x q");
  if (H.size() && H.cols() != m) throw InputError("state-space model: H must have m columns");
  const Index n = H.rows();
  if (rho.size() != n || innovation_sd.size() != n) {
    throw InputError("state-space model: idiosyncratic parameters must have one entry per series");
  }
  if ((rho.array().abs() > 0.9).any()) throw InputError("state-space model: |rho| must not exceed 0.9");
  if (coupling < 0.0 || coupling > 0.3) throw InputError("state-space model: coupling must lie in [0, 0.3]");
}

double spectral_radius(const Matrix& m) {
  Eigen::EigenSolver<Matrix> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix lyapunov(const Matrix& m, const Matrix& q) {
  const Index k = m.rows();
  if (spectral_radius(m) >= 1.0) throw DomainError("lyapunov: transition matrix is not stable");
  Matrix kron(k * k, k * k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) kron.block(i * k, j * k, k, k) = m(i, j) * m;
  }
  const Matrix a = Matrix::Identity(k * k, k * k) - kron;
  const Vector vec_q = q.reshaped();
  const Vector vec_s = a.partialPivLu().solve(vec_q);
  const Matrix s = vec_s.reshaped(k, k);
  return 0.5 * (s + s.transpose());
}

Matrix state_covariance(const StateSpaceModel& model) {
  return lyapunov(model.M, model.G_bar * model.G_bar.transpose());
}

StateSpaceModel normalize(const StateSpaceModel& model) {
  const Index m = model.m, r = model.r, w = model.w;
  const Matrix sigma = state_covariance(model);
  const Matrix sss = sigma.topLeftCorner(r, r);
  const auto eig = sym_eigen(sss);
  if (!(eig.eigenvalues(r - 1) > 1e-12 * eig.eigenvalues(0))) {
    throw DomainError("normalize: the strong-factor block has a singular stationary variance");
  }
  Matrix t = Matrix::Identity(m, m);
  t.topLeftCorner(r, r) = sym_sqrt(sss, true);
  if (w > 0) {
    t.block(r, 0, w, r) = -sigma.block(r, 0, w, r) * sss.inverse();
  }
  const Matrix t_inv = t.inverse();
  StateSpaceModel out = model;
  out.M = t * model.M * t_inv;
  out.G_bar = t * model.G_bar;
  if (model.H.size()) out.H = model.H * t_inv;
  out.normalized = true;
  return out;
}

MiniphaseResult check_miniphase(const StateSpaceModel& model, Index grid_size) {
  const Index m = model.m, q = model.q, r = model.r;
  if (grid_size < 2) throw InputError("check_miniphase: grid_size must be at least 2");
  MiniphaseResult result;
  result.required = m + q;
  result.rank = m + q;

  auto test = [&](std::complex<double> z) {
    const Index rank = numerical_rank(miniphase_matrix(model, z));
    if (rank < m + q) {
      result.pass = false;
      result.z = z;
      result.rank = rank;
      return true;
    }
    return false;
  };

  const double r_max = 1.0 - 1e-3;
  for (Index a = 0; a < grid_size; ++a) {
    const double radius = r_max * static_cast<double>(a) / static_cast<double>(grid_size - 1);
    for (Index b = 0; b < grid_size; ++b) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(b) / static_cast<double>(grid_size);
      if (test(std::polar(radius, angle))) return result;
      if (a == 0) break;
    }
  }

  // Rank drops of [I - Mz, -G; I_r, 0] are rank drops of the pencil
  // [E - z M E, -G] with E = [0; I_{m-r}]. A fixed orthonormal compression
  // to a square pencil yields a finite candidate set, each checked on the
  // full matrix.
  const Index k = m - r + q;
  if (k > m || k < 1) return result;
  Matrix e = Matrix::Zero(m, m - r);
  e.bottomRows(m - r).setIdentity();
  Matrix a(m, k), bm = Matrix::Zero(m, k);
  a << e, -model.G_bar;
  bm.leftCols(m - r) = model.M * e;
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal;
  Matrix draw(m, k);
  for (Index j = 0; j < draw.size(); ++j) draw(j) = normal(gen);
  const Matrix w = Eigen::HouseholderQR<Matrix>(draw).householderQ() * Matrix::Identity(m, k);
  Eigen::GeneralizedEigenSolver<Matrix> ges(w.transpose() * a, w.transpose() * bm, false);
  std::vector<std::complex<double>> candidates;
  for (Index j = 0; j < k; ++j) {
    const auto alpha = ges.alphas()(j);
    const double beta = ges.betas()(j);
    if (beta == 0.0) continue;
    const std::complex<double> z = alpha / beta;
    if (std::isfinite(z.real()) && std::isfinite(z.imag()) && std::abs(z) < 1.0) candidates.push_back(z);
  }
  std::sort(candidates.begin(), candidates.end(),
            [](auto lhs, auto rhs) { return std::abs(lhs) < std::abs(rhs); });
  for (auto z : candidates) {
    if (test(z)) return result;
  }
  return result;
}

RowVector lag_loading(const StateSpaceModel& model, Index factor, Index lag) {
  if (factor < 0 || factor >= model.r || lag < 0) throw InputError("lag_loading: index out of range");
  const Matrix sigma = state_covariance(model);
  const Matrix cross = sigma * matrix_power(model.M.transpose(), lag);
  return cross.row(factor) * sym_pinv(sigma);
}

Matrix population_lag_gram(const StateSpaceModel& model, Index p) {
  const Index r = model.r;
  const Matrix sigma = state_covariance(model);
  Matrix out(r * (p + 1), r * (p + 1));
  for (Index a = 0; a <= p; ++a) {
    for (Index b = a; b <= p; ++b) {
      const Matrix block = (matrix_power(model.M, b - a) * sigma).topLeftCorner(r, r);
      out.block(a * r, b * r, r, r) = block;
      out.block(b * r, a * r, r, r) = block.transpose();
    }
  }
  return 0.5 * (out + out.transpose());
}

Vector population_lag_cross(const StateSpaceModel& model, Index series, Index p) {
  if (series < 0 || series >= model.n()) throw InputError("population_lag_cross: series out of range");
  const Index r = model.r;
  const Matrix sigma = state_covariance(model);
  const Vector h = model.H.row(series).transpose();
  Vector out(r * (p + 1));
  Matrix mt_power = Matrix::Identity(model.m, model.m);
  for (Index l = 0; l <= p; ++l) {
    out.segment(l * r, r) = (sigma * mt_power * h).head(r);
    mt_power = mt_power * model.M.transpose();
  }
  return out;
}

Vector pseudo_true_beta(const StateSpaceModel& model, Index series, Index p, const std::vector<Index>& columns) {
  const Matrix gram = population_lag_gram(model, p)(columns, columns);
  const Vector cross = population_lag_cross(model, series, p)(columns);
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw SingularDesignError("pseudo_true_beta: population Gram of the selected columns is singular");
  }
  return ldlt.solve(cross);
}

std::vector<Index> oracle_basis(const StateSpaceModel& model, Index p, double tol) {
  const Matrix gram = population_lag_gram(model, p);
  std::vector<Index> chosen;
  for (Index c = 0; c < gram.rows(); ++c) {
    auto trial = chosen;
    trial.push_back(c);
    const auto eig = sym_eigen(gram(trial, trial));
    if (eig.eigenvalues(eig.eigenvalues.size() - 1) > tol * eig.eigenvalues(0)) chosen = std::move(trial);
  }
  return chosen;
}

Vector idiosyncratic_variance(const StateSpaceModel& model) {
  const Index n = model.n();
  Vector u(n);
  for (Index i = 0; i < n; ++i) u(i) = model.innovation_sd(i) * model.innovation_sd(i) / (1.0 - model.rho(i) * model.rho(i));
  Vector out = u;
  const double c = model.coupling;
  for (Index i = 1; i < n; ++i) out(i) = (u(i) + c * c * u(i - 1)) / (1.0 + c * c);
  return out;
}

PopulationShares population_shares(const StateSpaceModel& model) {
  const Matrix sigma = state_covariance(model);
  const Index n = model.n(), r = model.r;
  Matrix strong_part = Matrix::Zero(n, model.m);
  strong_part.leftCols(r) = model.H.leftCols(r);
  const Matrix weak_part = model.H - strong_part;
  PopulationShares s;
  s.xi = idiosyncratic_variance(model);
  s.common = ((strong_part * sigma).array() * strong_part.array()).rowwise().sum();
  s.weak = ((weak_part * sigma).array() * weak_part.array()).rowwise().sum();
  s.chi = ((model.H * sigma).array() * model.H.array()).rowwise().sum();
  s.total = s.chi + s.xi;
  s.common = s.common.cwiseQuotient(s.total);
  s.weak = s.weak.cwiseQuotient(s.total);
  s.chi = s.chi.cwiseQuotient(s.total);
  s.xi = s.xi.cwiseQuotient(s.total);
  return s;
}

StateSpaceModel attach_loadings(const StateSpaceModel& dynamics, Index n, const LoadingSpec& spec,
                                std::uint64_t loading_seed) {
  const Index r = dynamics.r, m = dynamics.m, w = dynamics.w;
  if (spec.strong_scale.size() != r) throw InputError("attach_loadings: strong_scale needs r entries");
  if (spec.weak_pairs > 0 && w == 0) throw InputError("attach_loadings: model has no weak block");
  if (!(spec.weak_share >= 0.0 && spec.weak_share < 1.0)) throw InputError("attach_loadings: weak_share in [0, 1)");
  const Index n_weak = 2 * spec.weak_pairs;
  const Index n_lag = 2 * spec.lagged_series;
  const Index n_plain = n - n_weak - n_lag;
  if (n_plain < r + 1) throw InputError("attach_loadings: too few series for the designated blocks");

  StateSpaceModel model = dynamics;
  model.H = Matrix::Zero(n, m);
  model.rho = Vector::Constant(n, spec.rho);
  model.innovation_sd = Vector::Constant(n, std::sqrt(1.0 - spec.rho * spec.rho));
  model.coupling = spec.coupling;
  model.weak_series.clear();
  model.lagged_series.clear();

  // Lagged rows carry F_1,t-1 exactly; each has a mirror that flips the
  // non-strong part so the strong and weak loading blocks stay orthogonal.
  const RowVector lag_row = spec.lagged_series > 0 ? lag_loading(dynamics, 0, 1) : RowVector();
  Matrix lag_rows(n_lag, m);
  for (Index k = 0; k < spec.lagged_series; ++k) {
    lag_rows.row(2 * k) = lag_row;
    lag_rows.row(2 * k + 1) = -lag_row;
    lag_rows.row(2 * k + 1).head(r) = lag_row.head(r);
  }

  std::mt19937_64 gen(loading_seed);
  std::uniform_real_distribution<double> unif(-spec.loading_bound, spec.loading_bound);
  const Index n_draw = n_plain + n_weak;
  Matrix draw(n_draw, r);
  for (Index i = 0; i < n_plain; ++i) {
    for (Index j = 0; j < r; ++j) draw(i, j) = unif(gen);
  }
  for (Index k = 0; k < spec.weak_pairs; ++k) {
    for (Index j = 0; j < r; ++j) draw(n_plain + 2 * k, j) = unif(gen);
    draw.row(n_plain + 2 * k + 1) = draw.row(n_plain + 2 * k);
  }

  // Rotate the drawn rows so the full strong block satisfies
  // Lambda'Lambda / n = diag(strong_scale).
  const Matrix lag_strong = lag_rows.leftCols(r);
  const Matrix target = static_cast<double>(n) * Matrix(spec.strong_scale.asDiagonal()) -
                        lag_strong.transpose() * lag_strong;
  const Eigen::LLT<Matrix> chol(draw.transpose() * draw);
  if (chol.info() != Eigen::Success) throw NumericalError("attach_loadings: degenerate loading draw");
  const Matrix root = sym_sqrt(target, false);
  const Matrix rot = chol.matrixU().solve(root);  // L^{-T} S^{1/2}
  Matrix lambda = draw * rot;

  for (Index j = 0; j < r; ++j) {
    Index best = j;
    for (Index i = j; i < n_plain; ++i) {
      if (lambda(i, j) > lambda(best, j)) best = i;
    }
    if (!(lambda(best, j) > 0.0)) throw NumericalError("attach_loadings: no positive pivot loading");
    lambda.row(j).swap(lambda.row(best));
  }

  model.H.topLeftCorner(n_plain, r) = lambda.topRows(n_plain);
  model.H.middleRows(n_plain, n_lag) = lag_rows;
  for (Index k = 0; k < n_lag; k += 2) model.lagged_series.push_back(n_plain + k);
  const Index weak_start = n_plain + n_lag;
  model.H.block(weak_start, 0, n_weak, r) = lambda.bottomRows(n_weak);

  if (spec.weak_pairs > 0) {
    const Matrix sigma = state_covariance(dynamics);
    const auto eig = sym_eigen(sigma.block(r, r, w, w));
    Vector u = eig.eigenvectors.col(0);
    for (Index k = 0; k < w; ++k) {
      if (u(k) != 0.0) {
        if (u(k) < 0.0) u = -u;
        break;
      }
    }
    const double mu_w = eig.eigenvalues(0);
    if (!(mu_w > 0.0)) throw DomainError("attach_loadings: weak block has zero variance");
    const Vector xi_var = idiosyncratic_variance(model);
    const double ratio = spec.weak_share / (1.0 - spec.weak_share);
    for (Index k = 0; k < spec.weak_pairs; ++k) {
      const Index i = weak_start + 2 * k;
      const RowVector strong = model.H.row(i).head(r);
      const Matrix& s_ff = sigma.topLeftCorner(r, r);
      const double strong_var = strong * s_ff * strong.transpose();
      const double a = std::sqrt(ratio * (strong_var + xi_var(i)) / mu_w);
      model.H.row(i).segment(r, w) = a * u.transpose();
      model.H.row(i + 1).segment(r, w) = -a * u.transpose();
      model.weak_series.push_back(i);
      model.weak_series.push_back(i + 1);
    }
  }
  model.validate();
  return model;
}

SimulatedPanel simulate(const StateSpaceModel& model, Index T, std::uint64_t seed, Index burn_in) {
  model.validate();
  if (T < 1) throw InputError("simulate: T must be positive");
  if (burn_in < 0) throw InputError("simulate: burn_in must be non-negative");
  if (model.n() < 1) throw InputError("simulate: model has no observation loadings");
  if (spectral_radius(model.M) >= 1.0) throw DomainError("simulate: transition matrix has spectral radius >= 1");

  const Index m = model.m, q = model.q, n = model.n();
  const double mix = 1.0 / std::sqrt(1.0 + model.coupling * model.coupling);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;

  SimulatedPanel out;
  out.seed = seed;
  out.state.resize(T, m);
  out.eps.resize(T, q);
  out.xi.resize(T, n);
  Vector x = Vector::Zero(m), u = Vector::Zero(n), e(q), nu(n);
  for (Index t = 0; t < burn_in + T; ++t) {
    for (Index k = 0; k < q; ++k) e(k) = normal(gen);
    for (Index i = 0; i < n; ++i) nu(i) = normal(gen);
    x = model.M * x + model.G_bar * e;
    u = model.rho.cwiseProduct(u) + model.innovation_sd.cwiseProduct(nu);
    if (t < burn_in) continue;
    const Index row = t - burn_in;
    out.state.row(row) = x.transpose();
    out.eps.row(row) = e.transpose();
    out.xi(row, 0) = u(0);
    for (Index i = 1; i < n; ++i) out.xi(row, i) = mix * (u(i) + model.coupling * u(i - 1));
  }
  out.F = out.state.leftCols(model.r);
  out.F_w = out.state.middleCols(model.r, model.w);
  out.chi = out.state * model.H.transpose();
  out.common = out.F * model.H.leftCols(model.r).transpose();
  out.weak = out.chi - out.common;
  out.y = out.chi + out.xi;
  return out;
}

}  // namespace gdfm
