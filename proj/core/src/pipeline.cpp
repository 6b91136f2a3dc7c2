#include "gdfm/pipeline.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "gdfm/csv.hpp"
#include "gdfm/errors.hpp"
#include "gdfm/parallel.hpp"

namespace gdfm {

namespace {

std::vector<Index> selected_columns(const Panel& panel, const std::vector<std::string>& ids) {
  std::vector<Index> out;
  if (ids.empty()) {
    for (Index i = 0; i < panel.num_series(); ++i) out.push_back(i);
    return out;
  }
  for (const auto& id : ids) {
    const Index c = panel.find_series(id);
    if (c < 0) throw ConfigError("unknown series '" + id + "'");
    out.push_back(c);
  }
  return out;
}

void check_config(const Panel& panel, const PipelineConfig& config) {
  if (config.r < 1) throw ConfigError("r must be at least 1");
  if (config.p < 0) throw ConfigError("p must be non-negative");
  if (config.r > std::min(panel.periods(), panel.num_series())) {
    throw ConfigError("r = " + std::to_string(config.r) + " exceeds min(n, T)");
  }
  if (config.p >= panel.periods()) throw ConfigError("p must be below the number of periods");
  if (config.lambda && !(*config.lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
}

EstimationResult assemble(const Panel& panel, const PipelineConfig& config, const std::vector<Index>& columns,
                          const std::function<SelectionMask(std::size_t, const Vector&, SeriesResult&)>& choose) {
  EstimationResult out;
  out.panel = panel;
  out.factors = extract_factors(panel.values, config.r);
  out.basis = build_lag_matrix(out.factors.factors, config.p);
  const Index t_eff = out.basis.rows();
  const auto k = columns.size();
  out.series.resize(k);
  Matrix y(t_eff, static_cast<Index>(k)), chi = Matrix::Zero(t_eff, static_cast<Index>(k));

  parallel_for(static_cast<Index>(k), config.threads, [&](Index s) {
    const auto slot = static_cast<std::size_t>(s);
    auto& res = out.series[slot];
    res.column = columns[slot];
    res.id = panel.series_ids[static_cast<std::size_t>(res.column)];
    const Vector response = panel.values.col(res.column).tail(t_eff);
    y.col(s) = response;
    res.mask = choose(slot, response, res);
    if (res.status != "ok") return;
    res.inference = infer(apply_mask(out.basis, res.mask), response, config.bandwidth, config.p_mode);
    res.weak = weak_factor_test(res.inference);
    chi.col(s) = response - res.inference.residuals;
  });

  out.decomposition = decompose(y, out.factors.factors.bottomRows(t_eff), chi);
  for (const auto& res : out.series) out.decomposition.series_ids.push_back(res.id);
  out.decomposition.time_index.assign(panel.time_index.end() - t_eff, panel.time_index.end());
  out.shares = variance_shares(out.decomposition);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

}  // namespace

PreparedPanel prepare_panel(const LoadedPanel& loaded, double outlier_iqr) {
  PreparedPanel out;
  out.raw_periods = loaded.panel.periods();
  out.rejected_rows = loaded.rejected_rows;
  Panel panel = loaded.meta.empty() ? loaded.panel : apply_tcodes(loaded.panel, loaded.meta);
  panel = trim_missing(panel);
  auto cleaned = clean_outliers(panel, outlier_iqr);
  out.outliers = std::move(cleaned.report);
  out.panel = standardize(cleaned.panel);
  return out;
}

std::vector<SeriesCalibration> calibrate_panel(const Panel& panel, const PipelineConfig& config) {
  check_config(panel, config);
  const auto columns = selected_columns(panel, config.series);
  CalibrationOptions options;
  options.r = config.r;
  options.p = config.p;
  options.window = config.window;
  options.calib_frac = config.calib_frac;
  options.reestimate_per_window = config.reestimate_per_window;
  const RollingCalibrator calibrator(panel.values, options);

  std::vector<SeriesCalibration> out(columns.size());
  parallel_for(static_cast<Index>(columns.size()), config.threads, [&](Index s) {
    auto& slot = out[static_cast<std::size_t>(s)];
    slot.column = columns[static_cast<std::size_t>(s)];
    slot.id = panel.series_ids[static_cast<std::size_t>(slot.column)];
    const auto grid = calibrator.default_grid(slot.column, config.grid_size, config.grid_ratio);
    slot.result = calibrator.calibrate(slot.column, grid);
  });
  return out;
}

EstimationResult estimate_panel(const Panel& panel, const PipelineConfig& config) {
  check_config(panel, config);
  const auto columns = selected_columns(panel, config.series);
  std::vector<SeriesCalibration> calibrations;
  if (!config.lambda) calibrations = calibrate_panel(panel, config);

  LagBasis basis_for_select;
  {
    const auto factors = extract_factors(panel.values, config.r);
    basis_for_select = build_lag_matrix(factors.factors, config.p);
  }
  auto result = assemble(panel, config, columns, [&](std::size_t slot, const Vector& y, SeriesResult& res) {
    res.lambda = config.lambda ? *config.lambda : calibrations[slot].result.optimal_penalty;
    try {
      auto selection = final_select(basis_for_select, y, res.lambda);
      res.dropped = std::move(selection.dropped);
      return selection.mask;
    } catch (const EmptySelectionError&) {
      res.status = "empty_selection";
      return SelectionMask::none(basis_for_select.columns());
    }
  });
  result.calibrations = std::move(calibrations);
  return result;
}

EstimationResult estimate_with_masks(const Panel& panel, const PipelineConfig& config,
                                     const std::map<std::string, SelectionMask>& masks) {
  check_config(panel, config);
  const auto columns = selected_columns(panel, config.series);
  const Index width = config.r * (config.p + 1);
  for (Index c : columns) {
    const auto& id = panel.series_ids[static_cast<std::size_t>(c)];
    const auto it = masks.find(id);
    if (it == masks.end()) throw ConfigError("no mask for series '" + id + "'");
    if (static_cast<Index>(it->second.selected.size()) != width) {
      throw ConfigError("mask for series '" + id + "' has the wrong width");
    }
  }
  return assemble(panel, config, columns, [&](std::size_t, const Vector&, SeriesResult& res) {
    const auto& mask = masks.at(res.id);
    if (mask.empty()) res.status = "empty_selection";
    return mask;
  });
}

std::string safe_name(const std::string& id) {
  std::string out;
  for (char ch : id) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '-' ||
                    ch == '_' || ch == '.';
    out += ok ? ch : '_';
  }
  return out.empty() ? "_" : out;
}

void write_calibration(const std::filesystem::path& dir, const std::vector<SeriesCalibration>& calibrations,
                       const std::vector<std::string>& labels) {
  std::filesystem::create_directories(dir / "incidence");
  std::ostringstream summary, path;
  summary << "series,optimal_lambda,optimal_index,mse,windows,monotonicity_violations\n";
  path << "series,index,lambda,mse\n";
  for (const auto& c : calibrations) {
    const auto& r = c.result;
    summary << csv::escape(c.id) << ',' << csv::format_double(r.optimal_penalty) << ',' << r.optimal_index << ','
            << csv::format_double(r.mse_per_penalty[static_cast<std::size_t>(r.optimal_index)]) << ','
            << r.window_selections.size() << ',' << r.monotonicity_violations << '\n';
    for (std::size_t g = 0; g < r.penalty_grid.size(); ++g) {
      path << csv::escape(c.id) << ',' << g << ',' << csv::format_double(r.penalty_grid[g]) << ','
           << csv::format_double(r.mse_per_penalty[g]) << '\n';
    }
    std::ostringstream inc;
    inc << "holdout_row";
    for (const auto& l : labels) inc << ',' << l;
    inc << '\n';
    for (std::size_t w = 0; w < r.window_selections.size(); ++w) {
      std::vector<int> row(labels.size(), 0);
      for (Index col : r.window_selections[w]) row[static_cast<std::size_t>(col)] = 1;
      inc << r.holdout_rows[w];
      for (int v : row) inc << ',' << v;
      inc << '\n';
    }
    write_text(dir / "incidence" / (safe_name(c.id) + ".csv"), inc.str());
  }
  write_text(dir / "calibration.csv", summary.str());
  write_text(dir / "lambda_path.csv", path.str());
}

void write_estimation(const std::filesystem::path& dir, const EstimationResult& result, PValueMode mode) {
  std::filesystem::create_directories(dir / "tables");
  std::vector<std::string> factor_labels;
  for (Index j = 0; j < result.factors.r(); ++j) factor_labels.push_back("F" + std::to_string(j + 1));
  csv::write_matrix(dir / "factors.csv", result.factors.factors, factor_labels, result.panel.time_index);
  csv::write_matrix(dir / "loadings.csv", result.factors.loadings, factor_labels, result.panel.series_ids, "series");

  std::ostringstream masks, selection;
  masks << "series";
  for (const auto& l : result.basis.labels) masks << ',' << l;
  masks << '\n';
  selection << "series,status,lambda,selected,dropped,weak_statistic,weak_dof,weak_p_value,weak_note\n";
  for (const auto& s : result.series) {
    masks << csv::escape(s.id);
    for (bool b : s.mask.selected) masks << ',' << (b ? 1 : 0);
    masks << '\n';
    std::string dropped;
    for (Index c : s.dropped) dropped += (dropped.empty() ? "" : " ") + result.basis.labels[static_cast<std::size_t>(c)];
    selection << csv::escape(s.id) << ',' << s.status << ',' << csv::format_double(s.lambda) << ','
              << s.mask.count() << ',' << csv::escape(dropped) << ',';
    if (s.weak.defined) {
      selection << csv::format_double(s.weak.statistic) << ',' << s.weak.dof << ','
                << csv::format_double(s.weak.p_value) << ',';
    } else {
      selection << ",,," << csv::escape(s.status == "ok" ? s.weak.note : "");
    }
    selection << '\n';
    if (s.status == "ok") write_coefficient_table(dir / "tables" / (safe_name(s.id) + ".csv"), t_table(s.inference, mode));
  }
  write_text(dir / "masks.csv", masks.str());
  write_text(dir / "selection.csv", selection.str());
  write_decomposition(dir / "decomposition", result.decomposition);
  if (!result.calibrations.empty()) write_calibration(dir / "calibration", result.calibrations, result.basis.labels);
}

std::map<std::string, SelectionMask> read_masks(const std::filesystem::path& path, const LagBasis& basis) {
  const auto table = csv::read_table(path);
  if (table.header.size() != static_cast<std::size_t>(basis.columns()) + 1) {
    throw ConfigError("masks file " + path.string() + " does not match r(p+1) = " + std::to_string(basis.columns()));
  }
  for (std::size_t c = 1; c < table.header.size(); ++c) {
    if (table.header[c] != basis.labels[c - 1]) throw ConfigError("masks file column '" + table.header[c] + "' is out of order");
  }
  std::map<std::string, SelectionMask> out;
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw StructuralError("ragged row in " + path.string());
    auto mask = SelectionMask::none(basis.columns());
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] != "0" && row[c] != "1") throw ParseError("mask entries must be 0 or 1", 0, c + 1);
      mask.selected[c - 1] = row[c] == "1";
    }
    out[row[0]] = std::move(mask);
  }
  return out;
}

}  // namespace gdfm
