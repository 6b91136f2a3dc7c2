#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gdfm/types.hpp"

namespace gdfm {

/// Monte Carlo experiments on simulated panels. Every replication estimates
/// factors by principal components and regresses on the model's oracle lag
/// basis.
///   coverage    share of 95% intervals covering the pseudo-true coefficients
///   rates       ||K_hat Lambda - I_r|| and chi MSE over an (n, T) grid
///   weak_size   weak-factor test rejections on lag-0-only series
///   weak_power  weak-factor test rejections on series driven by F_1,t-1
///   weak_share  estimated weak variance share of the designated series
struct ExperimentConfig {
  std::string experiment = "coverage";
  std::string model = "benchmark";
  std::vector<Index> n_grid{200};
  std::vector<Index> t_grid{1000};
  Index replications = 500;
  std::uint64_t base_seed = 1;
  std::uint64_t loading_seed = 20240101;
  Index p = 1;
  std::optional<Index> bandwidth;
  Index burn_in = 500;
  Index threads = 1;
  double level = 0.05;
  Index tracked = 4;
  std::optional<Index> weak_pairs;
};

struct Metric {
  std::string name;
  double mean = 0.0;
  double mcse = 0.0;  // Monte Carlo standard error of the mean
  Index count = 0;
};

struct ExperimentSummary {
  std::string experiment;
  std::string model;
  Index replications = 0;
  Index failures = 0;
  std::vector<std::string> failure_messages;
  std::vector<Metric> metrics;

  /// Throws InputError when no metric has this name.
  const Metric& metric(const std::string& name) const;
};

std::vector<std::string> experiment_names();

/// Replication k uses seed base_seed + k; results are merged by replication
/// index, so the summary does not depend on `threads`. More than 5% failed
/// replications in any cell raises NumericalError.
ExperimentSummary run_experiment(const ExperimentConfig& config);

void write_summary_csv(const std::filesystem::path& path, const ExperimentSummary& summary);

}  // namespace gdfm
