#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gdfm/types.hpp"

namespace gdfm {

/// A balanced T x n panel: rows are time periods, columns are series.
///
/// `means`/`sds` record the affine map applied by standardize() so that
/// unstandardize() can invert it exactly. They are empty for raw panels.
struct Panel {
  Matrix values;
  std::vector<std::string> series_ids;
  std::vector<std::string> time_index;
  bool standardized = false;
  Vector means;
  Vector sds;

  Index periods() const { return values.rows(); }
  Index num_series() const { return values.cols(); }

  /// Column of the series with this id, or -1.
  Index find_series(std::string_view id) const;
};

/// Per-series transformation code (FRED-MD numbering).
///   1 level, 2 first difference, 3 second difference, 4 log,
///   5 first difference of log, 6 second difference of log,
///   7 first difference of the growth rate x_t / x_{t-1} - 1.
struct SeriesMeta {
  int tcode = 1;
  std::string name;
};

enum class CsvLayout { fredmd, plain };

struct LoadedPanel {
  Panel panel;
  std::vector<SeriesMeta> meta;
  std::size_t rejected_rows = 0;  // rows dropped for an unparseable date
};

/// fredmd: header of series ids (first cell labels the date column), a
/// "Transform:" row of tcodes, then one row per period keyed by its date.
/// plain: header of series ids and numeric rows. A first header cell named
/// date/time/sasdate/t marks a time column; otherwise periods are numbered.
/// Empty cells and NA/NaN are read as missing.
LoadedPanel load_csv(const std::filesystem::path& path, CsvLayout layout);
LoadedPanel parse_csv(std::istream& in, CsvLayout layout);

CsvLayout parse_layout(std::string_view name);

/// Writes a panel in either layout; `meta` may be empty for plain output.
void write_panel_csv(const std::filesystem::path& path, const Panel& panel,
                     std::span<const SeriesMeta> meta, CsvLayout layout);

/// Number of leading observations consumed by a transformation code.
int differencing_order(int tcode);

/// Applies each series' tcode and drops the leading rows lost to the
/// largest differencing order so the panel stays rectangular.
Panel apply_tcodes(const Panel& panel, std::span<const SeriesMeta> meta);

/// Drops rows with missing values at the head and tail of the panel.
/// Missing values strictly inside the retained span are an error.
Panel trim_missing(const Panel& panel);

struct Imputation {
  std::string series;
  std::string time;
  double original_value = 0.0;
};

struct OutlierReport {
  std::vector<Imputation> imputations;
  std::vector<std::string> degenerate_series;  // IQR = 0
};

struct CleanedPanel {
  Panel panel;
  OutlierReport report;
};

/// Replaces every observation with |x - median| > threshold_iqr * IQR by the
/// mean of the remaining observations of that series. The rule is applied
/// until no observation is flagged, so the result is a fixed point.
CleanedPanel clean_outliers(const Panel& panel, double threshold_iqr = 10.0);

void write_imputation_report(const std::filesystem::path& path, const OutlierReport& report);

/// Centres every column and scales it to unit variance (denominator T).
Panel standardize(const Panel& panel);
Panel unstandardize(const Panel& panel);

/// Linear-interpolation sample quantile (R type 7) of the finite entries.
double quantile(std::span<const double> values, double prob);

}  // namespace gdfm
