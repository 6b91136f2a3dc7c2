#include "gdfm/montecarlo.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>

#include "gdfm/csv.hpp"
#include "gdfm/decomposition.hpp"
#include "gdfm/errors.hpp"
#include "gdfm/inference.hpp"
#include "gdfm/lag_design.hpp"
#include "gdfm/models.hpp"
#include "gdfm/parallel.hpp"
#include "gdfm/pca.hpp"
#include "gdfm/simulator.hpp"

namespace gdfm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMaxFailureShare = 0.05;

std::string series_id(Index i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "y%03d", static_cast<int>(i + 1));
  return buf;
}

struct Estimate {
  FactorEstimate factors;
  ReducedDesign design;
  Index p = 0;

  Vector response(const Matrix& y, Index series) const { return y.col(series).tail(design.design.rows()); }
};

Estimate estimate(const Matrix& y, Index r, Index p, const std::vector<Index>& columns) {
  Estimate e;
  e.p = p;
  e.factors = extract_factors(y, r);
  const auto basis = build_lag_matrix(e.factors.factors, p);
  auto mask = SelectionMask::none(basis.columns());
  for (Index c : columns) mask.selected[static_cast<std::size_t>(c)] = true;
  e.design = apply_mask(basis, mask);
  return e;
}

StateSpaceModel build_model(const ExperimentConfig& config, Index n) {
  if (config.model == "benchmark") {
    auto spec = benchmark_loading_spec();
    // twenty weak series would rival the strong eigenvalues at n = 50
    if (config.experiment == "rates") spec.weak_pairs = 2;
    if (config.weak_pairs) spec.weak_pairs = *config.weak_pairs;
    return benchmark_model(n, config.loading_seed, spec);
  }
  return make_model(config.model, n, config.loading_seed);
}

std::vector<Index> plain_series(const StateSpaceModel& model, Index count) {
  std::vector<Index> out;
  std::vector<bool> special(static_cast<std::size_t>(model.n()), false);
  for (Index i : model.weak_series) special[static_cast<std::size_t>(i)] = true;
  for (Index i : model.lagged_series) special[static_cast<std::size_t>(i)] = true;
  for (Index i : model.lagged_series) {
    if (i + 1 < model.n()) special[static_cast<std::size_t>(i + 1)] = true;
  }
  for (Index i = model.r; i < model.n() && static_cast<Index>(out.size()) < count; ++i) {
    if (!special[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

std::vector<Index> head(const std::vector<Index>& v, Index count) {
  return {v.begin(), v.begin() + std::min<Index>(count, static_cast<Index>(v.size()))};
}

// One (n, T) cell: metric names plus a per-replication evaluator.
struct Cell {
  Index n = 0;
  Index T = 0;
  std::vector<std::string> names;
  std::function<std::vector<double>(const SimulatedPanel&)> evaluate;
  StateSpaceModel model;
};

Cell coverage_cell(const ExperimentConfig& config, Index n, Index T) {
  Cell cell{n, T, {}, {}, build_model(config, n)};
  const auto& model = cell.model;
  const auto columns = oracle_basis(model, config.p);
  std::vector<Index> tracked = plain_series(model, config.tracked);
  for (Index i : head(model.weak_series, config.tracked)) tracked.push_back(i);
  for (Index i : head(model.lagged_series, config.tracked)) tracked.push_back(i);
  std::vector<Vector> truth;
  for (Index i : tracked) truth.push_back(pseudo_true_beta(model, i, config.p, columns));
  std::vector<std::string> labels;
  for (Index c : columns) labels.push_back(lag_label(c % model.r, c / model.r));

  for (const auto& label : labels) cell.names.push_back("coverage[" + label + "]");
  for (const auto& label : labels) cell.names.push_back("population_coverage[" + label + "]");
  for (Index i : tracked) {
    for (const auto& label : labels) cell.names.push_back("coverage[" + series_id(i) + ":" + label + "]");
  }
  const Index k = static_cast<Index>(columns.size());
  // The estimated factors are a sample rotation of the true ones, so the
  // coefficient being estimated is that of chi on the estimated regressors.
  cell.evaluate = [=, &config](const SimulatedPanel& sim) {
    const auto est = estimate(sim.y, model.r, config.p, columns);
    const auto qr = est.design.design.colPivHouseholderQr();
    const double share = 1.0 / static_cast<double>(tracked.size());
    std::vector<double> pooled(static_cast<std::size_t>(2 * k), 0.0);
    std::vector<double> per_series;
    for (std::size_t s = 0; s < tracked.size(); ++s) {
      const auto res = infer(est.design, est.response(sim.y, tracked[s]), config.bandwidth);
      const Vector target = qr.solve(est.response(sim.chi, tracked[s]));
      for (Index j = 0; j < k; ++j) {
        const double hit = std::abs(res.beta(j) - target(j)) <= 1.96 * res.se(j) ? 1.0 : 0.0;
        const double population_hit = std::abs(res.beta(j) - truth[s](j)) <= 1.96 * res.se(j) ? 1.0 : 0.0;
        pooled[static_cast<std::size_t>(j)] += hit * share;
        pooled[static_cast<std::size_t>(k + j)] += population_hit * share;
        per_series.push_back(hit);
      }
    }
    pooled.insert(pooled.end(), per_series.begin(), per_series.end());
    return pooled;
  };
  return cell;
}

Cell rates_cell(const ExperimentConfig& config, Index n, Index T) {
  Cell cell{n, T, {}, {}, build_model(config, n)};
  const auto& model = cell.model;
  const auto columns = oracle_basis(model, config.p);
  const std::string tag = "[n=" + std::to_string(n) + ",T=" + std::to_string(T) + "]";
  cell.names = {"knorm" + tag, "chi_mse" + tag};
  cell.evaluate = [=, &config](const SimulatedPanel& sim) {
    const auto est = estimate(sim.y, model.r, config.p, columns);
    const Matrix gap = est.factors.compression * model.strong_loadings() - Matrix::Identity(model.r, model.r);
    const Index t_eff = est.design.design.rows();
    double sse = 0.0;
    for (Index i = 0; i < model.n(); ++i) {
      const Vector y = est.response(sim.y, i);
      const auto fit = ols(est.design.design, y);
      sse += ((y - fit.residuals) - sim.chi.col(i).tail(t_eff)).squaredNorm();
    }
    return std::vector<double>{gap.norm(), sse / static_cast<double>(model.n() * t_eff)};
  };
  return cell;
}

Cell weak_test_cell(const ExperimentConfig& config, Index n, Index T, bool power) {
  Cell cell{n, T, {}, {}, build_model(config, n)};
  const auto& model = cell.model;
  const auto columns = oracle_basis(model, config.p);
  const auto tracked = power ? head(model.lagged_series, config.tracked) : plain_series(model, config.tracked);
  if (tracked.empty()) throw ConfigError("model has no series for this experiment");
  cell.names.push_back("rejection_rate");
  for (Index i : tracked) cell.names.push_back("rejection_rate[" + series_id(i) + "]");
  cell.evaluate = [=, &config](const SimulatedPanel& sim) {
    const auto est = estimate(sim.y, model.r, config.p, columns);
    std::vector<double> out{0.0};
    for (Index i : tracked) {
      const auto res = infer(est.design, est.response(sim.y, i), config.bandwidth);
      const auto test = weak_factor_test(res);
      if (!test.defined) throw NumericalError("oracle basis has no lag > 0 column");
      const double reject = test.p_value < config.level ? 1.0 : 0.0;
      out[0] += reject / static_cast<double>(tracked.size());
      out.push_back(reject);
    }
    return out;
  };
  return cell;
}

Cell weak_share_cell(const ExperimentConfig& config, Index n, Index T) {
  Cell cell{n, T, {}, {}, build_model(config, n)};
  const auto& model = cell.model;
  if (model.weak_series.empty()) throw ConfigError("model has no designated weak series");
  const auto columns = oracle_basis(model, config.p);
  const auto tracked = model.weak_series;
  const auto population = population_shares(model);
  cell.names.push_back("share_weak");
  for (Index i : tracked) cell.names.push_back("share_weak[" + series_id(i) + "]");
  for (Index i : tracked) cell.names.push_back("population_share_weak[" + series_id(i) + "]");
  cell.evaluate = [=, &config](const SimulatedPanel& sim) {
    const auto est = estimate(sim.y, model.r, config.p, columns);
    const Index t_eff = est.design.design.rows();
    Matrix y(t_eff, static_cast<Index>(tracked.size())), chi(t_eff, static_cast<Index>(tracked.size()));
    for (std::size_t s = 0; s < tracked.size(); ++s) {
      const auto idx = static_cast<Index>(s);
      y.col(idx) = est.response(sim.y, tracked[s]);
      chi.col(idx) = y.col(idx) - ols(est.design.design, y.col(idx)).residuals;
    }
    const auto d = decompose(y, est.factors.factors.bottomRows(t_eff), chi);
    const auto shares = variance_shares(d);
    std::vector<double> out{0.0};
    for (const auto& s : shares) {
      out[0] += s.share_weak / static_cast<double>(shares.size());
      out.push_back(s.share_weak);
    }
    for (Index i : tracked) out.push_back(population.weak(i));
    return out;
  };
  return cell;
}

}  // namespace

const Metric& ExperimentSummary::metric(const std::string& name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return m;
  }
  throw InputError("no metric named '" + name + "'");
}

std::vector<std::string> experiment_names() { return {"coverage", "rates", "weak_size", "weak_power", "weak_share"}; }

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  if (config.replications < 1) throw ConfigError("replications must be at least 1");
  if (config.n_grid.empty() || config.n_grid.size() != config.t_grid.size()) {
    throw ConfigError("n and T grids must be non-empty and of equal length");
  }
  if (config.p < 1) throw ConfigError("Monte Carlo experiments need p >= 1");

  ExperimentSummary summary;
  summary.experiment = config.experiment;
  summary.model = config.model;
  summary.replications = config.replications;

  std::vector<double> log_rate, log_knorm;
  for (std::size_t c = 0; c < config.n_grid.size(); ++c) {
    const Index n = config.n_grid[c], T = config.t_grid[c];
    Cell cell;
    if (config.experiment == "coverage") {
      cell = coverage_cell(config, n, T);
    } else if (config.experiment == "rates") {
      cell = rates_cell(config, n, T);
    } else if (config.experiment == "weak_size") {
      cell = weak_test_cell(config, n, T, false);
    } else if (config.experiment == "weak_power") {
      cell = weak_test_cell(config, n, T, true);
    } else if (config.experiment == "weak_share") {
      cell = weak_share_cell(config, n, T);
    } else {
      throw ConfigError("unknown experiment '" + config.experiment + "'");
    }

    const Index reps = config.replications;
    std::vector<std::vector<double>> values(static_cast<std::size_t>(reps));
    std::vector<std::string> errors(static_cast<std::size_t>(reps));
    parallel_for(reps, config.threads, [&](Index k) {
      const auto slot = static_cast<std::size_t>(k);
      try {
        const auto sim = simulate(cell.model, T, config.base_seed + static_cast<std::uint64_t>(k), config.burn_in);
        values[slot] = cell.evaluate(sim);
      } catch (const std::exception& e) {
        errors[slot] = e.what();
      }
    });

    Index failures = 0;
    for (Index k = 0; k < reps; ++k) {
      const auto& msg = errors[static_cast<std::size_t>(k)];
      if (msg.empty()) continue;
      ++failures;
      summary.failure_messages.push_back("replication " + std::to_string(k) + " (n=" + std::to_string(n) +
                                         ", T=" + std::to_string(T) + "): " + msg);
    }
    summary.failures += failures;
    if (static_cast<double>(failures) > kMaxFailureShare * static_cast<double>(reps)) {
      throw NumericalError("experiment '" + config.experiment + "': " + std::to_string(failures) + " of " +
                           std::to_string(reps) + " replications failed; first: " +
                           summary.failure_messages[summary.failure_messages.size() - static_cast<std::size_t>(failures)]);
    }

    for (std::size_t j = 0; j < cell.names.size(); ++j) {
      double sum = 0.0, sum_sq = 0.0;
      Index count = 0;
      for (const auto& v : values) {
        if (v.empty()) continue;
        sum += v[j];
        sum_sq += v[j] * v[j];
        ++count;
      }
      Metric metric{cell.names[j], kNaN, kNaN, count};
      if (count > 0) {
        metric.mean = sum / static_cast<double>(count);
        metric.mcse = 0.0;
        if (count > 1) {
          const double var = std::max(0.0, (sum_sq - sum * metric.mean) / static_cast<double>(count - 1));
          metric.mcse = std::sqrt(var / static_cast<double>(count));
        }
      }
      summary.metrics.push_back(metric);
    }
    if (config.experiment == "rates") {
      log_rate.push_back(std::log(1.0 / std::sqrt(static_cast<double>(n))));
      log_knorm.push_back(std::log(summary.metrics[summary.metrics.size() - 2].mean));
    }
  }

  if (config.experiment == "rates" && log_rate.size() >= 2) {
    const auto k = static_cast<double>(log_rate.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t c = 0; c < log_rate.size(); ++c) {
      mx += log_rate[c] / k;
      my += log_knorm[c] / k;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t c = 0; c < log_rate.size(); ++c) {
      sxy += (log_rate[c] - mx) * (log_knorm[c] - my);
      sxx += (log_rate[c] - mx) * (log_rate[c] - mx);
    }
    summary.metrics.push_back({"knorm_slope", sxy / sxx, 0.0, static_cast<Index>(log_rate.size())});
  }
  return summary;
}

void write_summary_csv(const std::filesystem::path& path, const ExperimentSummary& summary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "metric,mean,mcse,count\n";
  for (const auto& m : summary.metrics) {
    out << csv::escape(m.name) << ',' << csv::format_double(m.mean) << ',' << csv::format_double(m.mcse) << ','
        << m.count << '\n';
  }
}

}  // namespace gdfm
