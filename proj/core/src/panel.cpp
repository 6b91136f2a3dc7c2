#include "gdfm/panel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "gdfm/csv.hpp"
#include "gdfm/errors.hpp"

namespace gdfm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

bool valid_month(int m) { return m >= 1 && m <= 12; }
bool valid_day(int d) { return d >= 1 && d <= 31; }

// Accepts integer ticks, M/D/YYYY, YYYY/MM[/DD], YYYY-MM[-DD] and YYYYmMM.
bool is_time_label(std::string_view raw) {
  const auto s = strip(raw);
  if (s.empty()) return false;
  int value = 0;
  if (parse_int(s, value)) return true;
  for (char sep : {'/', '-'}) {
    if (s.find(sep) == std::string_view::npos) continue;
    const auto parts = split(s, sep);
    std::vector<int> nums;
    for (auto p : parts) {
      int v = 0;
      if (!parse_int(p, v)) return false;
      nums.push_back(v);
    }
    if (parts.size() == 3 && parts[2].size() == 4) return valid_month(nums[0]) && valid_day(nums[1]);
    if (parts.size() == 3 && parts[0].size() == 4) return valid_month(nums[1]) && valid_day(nums[2]);
    if (parts.size() == 2 && parts[0].size() == 4) return valid_month(nums[1]);
    return false;
  }
  const auto m = s.find_first_of("mM");
  if (m == 4) {
    int year = 0, month = 0;
    return parse_int(s.substr(0, 4), year) && parse_int(s.substr(5), month) && valid_month(month);
  }
  return false;
}

bool is_time_header(std::string_view cell) {
  const auto s = lower(strip(cell));
  return s == "date" || s == "time" || s == "sasdate" || s == "t" || s == "period";
}

void require_shape(const Panel& p) {
  if (p.periods() < 2) throw StructuralError("panel needs at least 2 periods");
  if (p.num_series() < 1) throw StructuralError("panel needs at least 1 series");
}

}  // namespace

Index Panel::find_series(std::string_view id) const {
  for (std::size_t j = 0; j < series_ids.size(); ++j) {
    if (series_ids[j] == id) return static_cast<Index>(j);
  }
  return -1;
}

CsvLayout parse_layout(std::string_view name) {
  const auto s = lower(name);
  if (s == "fredmd") return CsvLayout::fredmd;
  if (s == "plain") return CsvLayout::plain;
  throw ConfigError("unknown CSV layout '" + std::string(name) + "' (expected fredmd or plain)");
}

LoadedPanel parse_csv(std::istream& in, CsvLayout layout) {
  const auto rows = csv::read_rows(in);
  if (rows.empty()) throw StructuralError("empty CSV input");

  const auto& header = rows[0];
  const bool has_time = layout == CsvLayout::fredmd || is_time_header(header.front());
  const std::size_t first_series = has_time ? 1 : 0;
  if (header.size() <= first_series) throw StructuralError("CSV header lists no series");
  const std::size_t width = header.size();
  const std::size_t n = width - first_series;

  LoadedPanel out;
  out.meta.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.meta[j].name = std::string(strip(header[first_series + j]));
    out.panel.series_ids.push_back(out.meta[j].name);
  }

  std::size_t data_start = 1;
  if (layout == CsvLayout::fredmd) {
    if (rows.size() < 2) throw StructuralError("fredmd layout requires a transform-code row");
    const auto& tc = rows[1];
    if (tc.size() != width) {
      throw StructuralError("transform row has " + std::to_string(tc.size()) +
                            " fields, header has " + std::to_string(width));
    }
    if (lower(strip(tc[0])).rfind("transform", 0) != 0) {
      throw ParseError("second row must start with 'Transform:'", 2, 1);
    }
    for (std::size_t j = 0; j < n; ++j) {
      int code = 0;
      const auto cell = strip(tc[first_series + j]);
      double as_double = 0.0;
      if (!parse_int(cell, code)) {
        // tcodes are sometimes written as 5.0
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), as_double);
        if (ec != std::errc() || ptr != cell.data() + cell.size() || as_double != std::floor(as_double)) {
          throw ParseError("transform code is not an integer", 2, first_series + j + 1);
        }
        code = static_cast<int>(as_double);
      }
      if (code < 1 || code > 7) throw ParseError("transform code outside 1..7", 2, first_series + j + 1);
      out.meta[j].tcode = code;
    }
    data_start = 2;
  }

  std::vector<std::vector<double>> columns(n);
  for (std::size_t i = data_start; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != width) {
      throw StructuralError("ragged row " + std::to_string(i + 1) + ": " + std::to_string(row.size()) +
                            " fields, header has " + std::to_string(width));
    }
    if (has_time && !is_time_label(row[0])) {
      ++out.rejected_rows;
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const auto v = csv::parse_number(row[first_series + j], i + 1, first_series + j + 1);
      columns[j].push_back(v.value_or(kNaN));
    }
    out.panel.time_index.push_back(has_time ? std::string(strip(row[0]))
                                            : std::to_string(out.panel.time_index.size() + 1));
  }

  const auto T = static_cast<Index>(out.panel.time_index.size());
  out.panel.values.resize(T, static_cast<Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    for (Index t = 0; t < T; ++t) out.panel.values(t, static_cast<Index>(j)) = columns[j][static_cast<std::size_t>(t)];
  }
  require_shape(out.panel);
  return out;
}

LoadedPanel load_csv(const std::filesystem::path& path, CsvLayout layout) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("cannot open data file: " + path.string());
  return parse_csv(in, layout);
}

void write_panel_csv(const std::filesystem::path& path, const Panel& panel,
                     std::span<const SeriesMeta> meta, CsvLayout layout) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  const auto n = static_cast<std::size_t>(panel.num_series());
  out << (layout == CsvLayout::fredmd ? "sasdate" : "date");
  for (const auto& id : panel.series_ids) out << ',' << csv::escape(id);
  out << '\n';
  if (layout == CsvLayout::fredmd) {
    if (!meta.empty() && meta.size() != n) throw InputError("write_panel_csv: meta size mismatch");
    out << "Transform:";
    for (std::size_t j = 0; j < n; ++j) out << ',' << (meta.empty() ? 1 : meta[j].tcode);
    out << '\n';
  }
  for (Index t = 0; t < panel.periods(); ++t) {
    out << csv::escape(panel.time_index[static_cast<std::size_t>(t)]);
    for (Index j = 0; j < panel.num_series(); ++j) out << ',' << csv::format_double(panel.values(t, j));
    out << '\n';
  }
}

int differencing_order(int tcode) {
  switch (tcode) {
    case 1:
    case 4:
      return 0;
    case 2:
    case 5:
      return 1;
    case 3:
    case 6:
    case 7:
      return 2;
    default:
      throw InputError("transform code outside 1..7: " + std::to_string(tcode));
  }
}

Panel apply_tcodes(const Panel& panel, std::span<const SeriesMeta> meta) {
  const Index T = panel.periods();
  const Index n = panel.num_series();
  if (static_cast<Index>(meta.size()) != n) throw InputError("apply_tcodes: one SeriesMeta per series required");

  int max_order = 0;
  for (const auto& m : meta) max_order = std::max(max_order, differencing_order(m.tcode));
  if (T - max_order < 2) throw StructuralError("too few periods left after differencing");

  Matrix out(T, n);
  for (Index j = 0; j < n; ++j) {
    const int code = meta[static_cast<std::size_t>(j)].tcode;
    Vector x = panel.values.col(j);
    if (code >= 4 && code <= 6) {
      for (Index t = 0; t < T; ++t) {
        if (std::isnan(x(t))) continue;
        if (x(t) <= 0.0) {
          throw DomainError("log of non-positive value in series '" + panel.series_ids[static_cast<std::size_t>(j)] +
                            "' at row " + std::to_string(t + 1) + " (" + panel.time_index[static_cast<std::size_t>(t)] + ")");
        }
        x(t) = std::log(x(t));
      }
    }
    Vector y = Vector::Constant(T, kNaN);
    switch (code) {
      case 1:
      case 4:
        y = x;
        break;
      case 2:
      case 5:
        for (Index t = 1; t < T; ++t) y(t) = x(t) - x(t - 1);
        break;
      case 3:
      case 6:
        for (Index t = 2; t < T; ++t) y(t) = x(t) - 2.0 * x(t - 1) + x(t - 2);
        break;
      case 7:
        for (Index t = 2; t < T; ++t) {
          if (x(t - 1) == 0.0 || x(t - 2) == 0.0) {
            throw DomainError("growth rate undefined (zero level) in series '" +
                              panel.series_ids[static_cast<std::size_t>(j)] + "' at row " + std::to_string(t + 1));
          }
          y(t) = (x(t) / x(t - 1) - 1.0) - (x(t - 1) / x(t - 2) - 1.0);
        }
        break;
      default:
        break;
    }
    out.col(j) = y;
  }

  Panel result;
  result.values = out.bottomRows(T - max_order);
  result.series_ids = panel.series_ids;
  result.time_index.assign(panel.time_index.begin() + max_order, panel.time_index.end());
  return result;
}

Panel trim_missing(const Panel& panel) {
  const Index T = panel.periods();
  auto complete = [&](Index t) { return panel.values.row(t).array().isFinite().all(); };
  Index first = 0;
  while (first < T && !complete(first)) ++first;
  Index last = T - 1;
  while (last >= first && !complete(last)) --last;
  if (first > last) throw StructuralError("no complete period in panel");
  for (Index t = first; t <= last; ++t) {
    for (Index j = 0; j < panel.num_series(); ++j) {
      if (!std::isfinite(panel.values(t, j))) {
        throw StructuralError("interior missing value in series '" + panel.series_ids[static_cast<std::size_t>(j)] +
                              "' at " + panel.time_index[static_cast<std::size_t>(t)]);
      }
    }
  }
  Panel out = panel;
  out.values = panel.values.middleRows(first, last - first + 1);
  out.time_index.assign(panel.time_index.begin() + first, panel.time_index.begin() + last + 1);
  require_shape(out);
  return out;
}

double quantile(std::span<const double> values, double prob) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values) {
    if (std::isfinite(x)) v.push_back(x);
  }
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

CleanedPanel clean_outliers(const Panel& panel, double threshold_iqr) {
  if (!(threshold_iqr > 0.0)) throw InputError("clean_outliers: threshold must be positive");
  CleanedPanel out{panel, {}};
  const Index T = panel.periods();
  for (Index j = 0; j < panel.num_series(); ++j) {
    auto col = out.panel.values.col(j);
    std::vector<bool> imputed(static_cast<std::size_t>(T), false);
    bool flagged_degenerate = false;
    // Each pass can shrink the IQR, so iterate to a fixed point. Every pass
    // that changes anything imputes at least one new observation.
    for (Index pass = 0; pass <= T; ++pass) {
      std::vector<double> v(col.data(), col.data() + T);
      const double q1 = quantile(v, 0.25);
      const double med = quantile(v, 0.5);
      const double q3 = quantile(v, 0.75);
      const double iqr = q3 - q1;
      if (iqr == 0.0 && !flagged_degenerate) {
        out.report.degenerate_series.push_back(panel.series_ids[static_cast<std::size_t>(j)]);
        flagged_degenerate = true;
      }
      std::vector<Index> outliers;
      double sum = 0.0;
      Index kept = 0;
      for (Index t = 0; t < T; ++t) {
        if (!std::isfinite(col(t))) continue;
        if (std::abs(col(t) - med) > threshold_iqr * iqr) {
          outliers.push_back(t);
        } else {
          sum += col(t);
          ++kept;
        }
      }
      if (outliers.empty() || kept == 0) break;
      const double fill = sum / static_cast<double>(kept);
      for (Index t : outliers) {
        if (!imputed[static_cast<std::size_t>(t)]) {
          out.report.imputations.push_back({panel.series_ids[static_cast<std::size_t>(j)],
                                            panel.time_index[static_cast<std::size_t>(t)], panel.values(t, j)});
          imputed[static_cast<std::size_t>(t)] = true;
        }
        col(t) = fill;
      }
    }
  }
  return out;
}

void write_imputation_report(const std::filesystem::path& path, const OutlierReport& report) {
  csv::Table table;
  table.header = {"series", "time", "original_value"};
  for (const auto& imp : report.imputations) {
    table.rows.push_back({imp.series, imp.time, csv::format_double(imp.original_value)});
  }
  csv::write_table(path, table);
}

Panel standardize(const Panel& panel) {
  require_shape(panel);
  if (!panel.values.allFinite()) throw InputError("standardize: panel has missing values");
  const Index T = panel.periods();
  const Index n = panel.num_series();
  Panel out = panel;
  Vector mean(n), sd(n);
  for (Index j = 0; j < n; ++j) {
    const double m = panel.values.col(j).mean();
    const double var = (panel.values.col(j).array() - m).square().sum() / static_cast<double>(T);
    const double scale = std::max(1.0, panel.values.col(j).cwiseAbs().maxCoeff());
    if (!(var > 1e-24 * scale * scale)) {
      throw DomainError("zero-variance series '" + panel.series_ids[static_cast<std::size_t>(j)] + "'");
    }
    mean(j) = m;
    sd(j) = std::sqrt(var);
    out.values.col(j) = (panel.values.col(j).array() - m) / sd(j);
  }
  if (panel.standardized && panel.means.size() == n && panel.sds.size() == n) {
    // compose with the transform already applied so unstandardize() returns the raw data
    out.means = panel.means.array() + panel.sds.array() * mean.array();
    out.sds = panel.sds.array() * sd.array();
  } else {
    out.means = mean;
    out.sds = sd;
  }
  out.standardized = true;
  return out;
}

Panel unstandardize(const Panel& panel) {
  if (!panel.standardized) return panel;
  Panel out = panel;
  for (Index j = 0; j < panel.num_series(); ++j) {
    out.values.col(j) = panel.values.col(j).array() * panel.sds(j) + panel.means(j);
  }
  out.standardized = false;
  out.means.resize(0);
  out.sds.resize(0);
  return out;
}

}  // namespace gdfm
