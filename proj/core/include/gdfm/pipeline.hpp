#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gdfm/decomposition.hpp"
#include "gdfm/inference.hpp"
#include "gdfm/lag_design.hpp"
#include "gdfm/lasso.hpp"
#include "gdfm/panel.hpp"
#include "gdfm/pca.hpp"

namespace gdfm {

struct PipelineConfig {
  Index r = 8;
  Index p = 24;
  Index window = 488;
  double calib_frac = 0.8;
  Index grid_size = 100;
  double grid_ratio = 1e-3;
  std::optional<double> lambda;  // fixed penalty; calibrate per series when empty
  std::optional<Index> bandwidth;
  PValueMode p_mode = PValueMode::two_sided;
  bool reestimate_per_window = false;
  double outlier_iqr = 10.0;
  Index threads = 1;
  std::vector<std::string> series;  // subset of series ids; all when empty
};

struct PreparedPanel {
  Panel panel;  // transformed, trimmed, cleaned and standardized
  OutlierReport outliers;
  Index raw_periods = 0;
  std::size_t rejected_rows = 0;
};

/// tcodes -> trim missing head/tail -> outlier cleaning -> standardize.
PreparedPanel prepare_panel(const LoadedPanel& loaded, double outlier_iqr = 10.0);

struct SeriesCalibration {
  std::string id;
  Index column = 0;
  CalibrationResult result;
};

/// Rolling calibration for the selected series (all by default).
std::vector<SeriesCalibration> calibrate_panel(const Panel& panel, const PipelineConfig& config);

struct SeriesResult {
  std::string id;
  Index column = 0;
  std::string status = "ok";  // ok | empty_selection
  double lambda = 0.0;
  SelectionMask mask;
  std::vector<Index> dropped;
  InferenceResult inference;
  WeakFactorTest weak;
};

struct EstimationResult {
  Panel panel;
  FactorEstimate factors;
  LagBasis basis;
  std::vector<SeriesCalibration> calibrations;
  std::vector<SeriesResult> series;
  Decomposition decomposition;
  std::vector<VarianceShare> shares;
};

/// Full chain on a prepared panel: calibration (unless a fixed penalty is
/// given), final selection, OLS with HAC inference and the decomposition.
/// A series whose final LASSO selects nothing keeps chi_hat = 0 and is
/// flagged as empty_selection.
EstimationResult estimate_panel(const Panel& panel, const PipelineConfig& config);

/// Same chain with externally supplied masks keyed by series id.
EstimationResult estimate_with_masks(const Panel& panel, const PipelineConfig& config,
                                     const std::map<std::string, SelectionMask>& masks);

void write_calibration(const std::filesystem::path& dir, const std::vector<SeriesCalibration>& calibrations,
                       const std::vector<std::string>& labels);

/// factors.csv, loadings.csv, masks.csv, selection.csv, tables/<id>.csv,
/// the decomposition files and, when present, calibration output.
void write_estimation(const std::filesystem::path& dir, const EstimationResult& result, PValueMode mode);

std::map<std::string, SelectionMask> read_masks(const std::filesystem::path& path, const LagBasis& basis);

/// File-name-safe version of a series id.
std::string safe_name(const std::string& id);

}  // namespace gdfm
