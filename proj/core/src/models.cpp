#include "gdfm/models.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <span>

#include "gdfm/errors.hpp"

namespace gdfm {

StateSpaceModel lagged_var_dynamics(const Matrix& a, const Matrix& b) {
  const Index r = a.rows();
  if (a.cols() != r || b.rows() != r) throw InputError("lagged_var_dynamics: shape mismatch");
  StateSpaceModel model;
  model.r = r;
  model.w = r;
  model.q = b.cols();
  model.m = 2 * r;
  model.M = Matrix::Zero(2 * r, 2 * r);
  model.M.topLeftCorner(r, r) = a;
  model.M.bottomLeftCorner(r, r).setIdentity();
  model.G_bar = Matrix::Zero(2 * r, model.q);
  model.G_bar.topRows(r) = b;
  return model;
}

StateSpaceModel benchmark_dynamics() {
  Matrix a(2, 2);
  a << 0.6, 0.2, -0.3, 0.5;
  Matrix b(2, 1);
  b << 1.0, 0.0;
  auto model = normalize(lagged_var_dynamics(a, b));
  model.name = "benchmark";
  return model;
}

LoadingSpec benchmark_loading_spec() {
  LoadingSpec spec;
  spec.strong_scale = Vector(2);
  spec.strong_scale << 1.2, 0.6;
  return spec;
}

StateSpaceModel benchmark_model(Index n, std::uint64_t loading_seed, const LoadingSpec& spec) {
  return attach_loadings(benchmark_dynamics(), n, spec, loading_seed);
}

StateSpaceModel example1_dynamics() {
  StateSpaceModel model;
  model.name = "example1";
  model.r = 2;
  model.q = 1;
  model.m = 2;
  model.M = 0.5 * Matrix::Identity(2, 2);
  model.G_bar = Matrix::Zero(2, 1);
  model.G_bar(0, 0) = 1.0;
  return model;
}

StateSpaceModel example1_model(Index n, std::uint64_t loading_seed) {
  LoadingSpec spec = benchmark_loading_spec();
  spec.weak_pairs = 0;
  spec.lagged_series = 0;
  return attach_loadings(example1_dynamics(), n, spec, loading_seed);
}

StateSpaceModel ma_failure_model(Index n) {
  StateSpaceModel model;
  model.name = "ma_failure";
  model.r = 1;
  model.q = 1;
  model.m = 2;
  model.M = Matrix::Zero(2, 2);
  model.M(0, 1) = -2.0;
  model.G_bar = Matrix::Ones(2, 1);
  model.H = Matrix::Zero(n, 2);
  model.H.col(0).setOnes();
  model.rho = Vector::Constant(n, 0.5);
  model.innovation_sd = Vector::Constant(n, std::sqrt(0.75));
  return model;
}

StateSpaceModel one_factor_model(Index n) {
  StateSpaceModel model;
  model.name = "one_factor";
  model.r = 1;
  model.q = 1;
  model.m = 1;
  model.M = Matrix::Constant(1, 1, 0.5);
  model.G_bar = Matrix::Constant(1, 1, std::sqrt(0.75));
  model.H = Matrix::Ones(n, 1);
  model.rho = Vector::Constant(n, 0.5);
  model.innovation_sd = Vector::Constant(n, std::sqrt(0.75));
  model.normalized = true;
  return model;
}

StateSpaceModel fred_like_model(Index n, std::uint64_t loading_seed) {
  constexpr Index r = 8, q = 4;
  std::mt19937_64 gen(99);
  std::normal_distribution<double> normal;
  Matrix draw(r, r), b(r, q);
  for (Index k = 0; k < draw.size(); ++k) draw(k) = normal(gen);
  for (Index k = 0; k < b.size(); ++k) b(k) = normal(gen);
  const Matrix u = Eigen::HouseholderQR<Matrix>(draw).householderQ();
  Vector roots(r);
  for (Index j = 0; j < r; ++j) roots(j) = 0.7 - 0.5 * static_cast<double>(j) / static_cast<double>(r - 1);
  const Matrix a = u * roots.asDiagonal() * u.transpose();
  auto dynamics = normalize(lagged_var_dynamics(a, b));
  dynamics.name = "fred_like";

  LoadingSpec spec;
  spec.strong_scale = Vector(r);
  for (Index j = 0; j < r; ++j) spec.strong_scale(j) = 2.0 - 1.6 * static_cast<double>(j) / static_cast<double>(r - 1);
  spec.weak_pairs = 6;
  spec.lagged_series = 2;
  return attach_loadings(dynamics, n, spec, loading_seed);
}

std::vector<std::string> model_names() { return {"benchmark", "example1", "ma_failure", "one_factor", "fred_like"}; }

StateSpaceModel make_model(const std::string& name, Index n, std::uint64_t loading_seed) {
  if (name == "benchmark") return benchmark_model(n, loading_seed);
  if (name == "example1") return example1_model(n, loading_seed);
  if (name == "ma_failure") return ma_failure_model(n);
  if (name == "one_factor") return one_factor_model(n);
  if (name == "fred_like") return fred_like_model(n, loading_seed);
  throw ConfigError("unknown model '" + name + "'");
}

namespace {

std::vector<std::string> monthly_dates(const std::string& first, Index count) {
  int year = 0, month = 0;
  if (std::sscanf(first.c_str(), "%d-%d", &year, &month) != 2 || month < 1 || month > 12) {
    throw ConfigError("first_date must look like YYYY-MM");
  }
  std::vector<std::string> out;
  for (Index k = 0; k < count; ++k) {
    out.push_back(std::to_string(month) + "/1/" + std::to_string(year));
    if (++month > 12) {
      month = 1;
      ++year;
    }
  }
  return out;
}

std::string series_name(Index i) {
  static const char* named[] = {"INDPRO", "PAYEMS", "UNRATE", "CPIAUCSL", "RPI", "M2SL", "FEDFUNDS", "GS10"};
  if (i < 8) return named[i];
  char buf[16];
  std::snprintf(buf, sizeof buf, "SER%03d", static_cast<int>(i + 1));
  return buf;
}

// Raw levels whose tcode transform reproduces `z` on rows 2.. exactly up to
// rounding.
Vector integrate(const Vector& z, int tcode) {
  const Index rows = z.size() + 2;
  Vector level(rows);
  switch (tcode) {
    case 1:
    case 4:
      level.tail(z.size()) = z;
      level(0) = level(1) = z(0);
      break;
    case 2:
    case 5:
      level(0) = level(1) = 0.0;
      for (Index t = 2; t < rows; ++t) level(t) = level(t - 1) + z(t - 2);
      break;
    case 3:
    case 6: {
      level(0) = level(1) = 0.0;
      double slope = 0.0;
      for (Index t = 2; t < rows; ++t) {
        slope += z(t - 2);
        level(t) = level(t - 1) + slope;
      }
      break;
    }
    default:
      break;
  }
  return level;
}

}  // namespace

LoadedPanel fred_like_panel(const FredLikeOptions& options) {
  if (options.T < 10) throw ConfigError("fred_like_panel: T too small");
  const auto model = fred_like_model(options.n, options.loading_seed);
  const auto sim = simulate(model, options.T, options.seed);
  const Index rows = options.T + 2;

  LoadedPanel out;
  out.panel.values.resize(rows, options.n);
  out.panel.time_index = monthly_dates(options.first_date, rows);
  for (Index i = 0; i < options.n; ++i) {
    const int tcode = static_cast<int>(i % 7) + 1;
    out.meta.push_back({tcode, series_name(i)});
    out.panel.series_ids.push_back(series_name(i));
    const Vector y = sim.y.col(i);
    Vector raw(rows);
    switch (tcode) {
      case 1:
        raw = integrate((y.array() + 5.0).matrix(), 1);
        break;
      case 2:
        raw = (integrate(0.5 * y, 2).array() + 100.0).matrix();
        break;
      case 3:
        raw = (integrate(0.05 * y, 3).array() + 50.0).matrix();
        break;
      case 4:
        raw = integrate((0.1 * y.array() + 3.0).matrix(), 4).array().exp().matrix();
        break;
      case 5:
        raw = (integrate((0.01 * y.array() + 0.002).matrix(), 5).array() + 4.0).exp().matrix();
        break;
      case 6:
        raw = (integrate(0.001 * y, 6).array() + 5.0).exp().matrix();
        break;
      case 7: {
        raw(0) = 100.0;
        double growth = 0.004;
        raw(1) = raw(0) * (1.0 + growth);
        for (Index t = 2; t < rows; ++t) {
          growth += 0.001 * y(t - 2);
          raw(t) = raw(t - 1) * (1.0 + growth);
        }
        break;
      }
    }
    out.panel.values.col(i) = raw;
  }
  // a few level outliers in tcode-1 series and one missing value at the head
  for (Index k = 0; k < options.outliers; ++k) {
    const Index series = 7 * k;
    if (series >= options.n) break;
    const Index row = 2 + (k + 1) * options.T / (options.outliers + 1);
    const Vector col = out.panel.values.col(series);
    const std::span<const double> vals(col.data(), static_cast<std::size_t>(col.size()));
    out.panel.values(row, series) += 25.0 * (quantile(vals, 0.75) - quantile(vals, 0.25));
  }
  if (options.n > 1) out.panel.values(0, 1) = std::nan("");
  return out;
}

Panel simulated_panel(const SimulatedPanel& sim) {
  Panel panel;
  panel.values = sim.y;
  for (Index i = 0; i < sim.y.cols(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "y%03d", static_cast<int>(i + 1));
    panel.series_ids.push_back(buf);
  }
  for (Index t = 0; t < sim.y.rows(); ++t) panel.time_index.push_back(std::to_string(t + 1));
  return panel;
}

}  // namespace gdfm
