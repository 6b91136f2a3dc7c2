#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "gdfm/csv.hpp"
#include "gdfm/errors.hpp"
#include "gdfm/models.hpp"
#include "gdfm/montecarlo.hpp"
#include "gdfm/pipeline.hpp"
#include "gdfm/simulator.hpp"

namespace gdfm::cli {

namespace {

std::optional<Index> bandwidth_setting(const RunConfig& config) {
  const auto bw = config.find("bandwidth");
  if (!bw || *bw == "auto") return std::nullopt;
  const long v = config.get_int("bandwidth");
  if (v < 0) throw ConfigError("bandwidth must be non-negative");
  return static_cast<Index>(v);
}

PValueMode p_mode(const RunConfig& config) {
  const auto& s = config.get("p_values");
  if (s == "two_sided") return PValueMode::two_sided;
  if (s == "one_sided") return PValueMode::one_sided;
  throw ConfigError("p_values must be two_sided or one_sided");
}

PipelineConfig pipeline_config(const RunConfig& config) {
  PipelineConfig pc;
  pc.r = config.get_int("r");
  pc.p = config.get_int("p");
  pc.window = config.get_int("window");
  pc.calib_frac = config.get_double("calib_frac");
  pc.grid_size = config.get_int("grid_size");
  pc.grid_ratio = config.get_double("grid_ratio");
  if (config.has("lambda")) pc.lambda = config.get_double("lambda");
  pc.bandwidth = bandwidth_setting(config);
  pc.p_mode = p_mode(config);
  pc.reestimate_per_window = config.get_bool("reestimate_per_window");
  pc.outlier_iqr = config.get_double("outlier_iqr");
  pc.threads = std::max(1L, config.get_int("threads"));
  pc.series = config.get_list("series");
  return pc;
}

PreparedPanel load_prepared(const RunConfig& config, std::ostream& log) {
  auto loaded = load_csv(config.get("data"), parse_layout(config.get("layout")));
  if (!config.get_bool("transform")) loaded.meta.clear();
  auto prepared = prepare_panel(loaded, config.get_double("outlier_iqr"));
  log << "panel: " << prepared.panel.num_series() << " series, " << prepared.panel.periods() << " periods after "
      << "preparation (" << prepared.raw_periods << " raw, " << prepared.rejected_rows << " rejected rows, "
      << prepared.outliers.imputations.size() << " outliers imputed)\n";
  write_imputation_report(config.out / "outliers.csv", prepared.outliers);
  write_panel_csv(config.out / "prepared_panel.csv", prepared.panel, {}, CsvLayout::plain);
  return prepared;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::vector<std::string> numbered(const std::string& prefix, Index count) {
  std::vector<std::string> out;
  for (Index j = 0; j < count; ++j) out.push_back(prefix + std::to_string(j + 1));
  return out;
}

void log_estimation(const EstimationResult& result, std::ostream& log) {
  Index ok = 0, rejections = 0, tested = 0;
  for (const auto& s : result.series) {
    if (s.status == "ok") ++ok;
    if (s.weak.defined) {
      ++tested;
      if (s.weak.p_value < 0.05) ++rejections;
    }
  }
  log << "estimated " << ok << " of " << result.series.size() << " series; weak-factor test rejects at 5% for "
      << rejections << " of " << tested << " testable series\n";
}

}  // namespace

std::map<std::string, std::string> input_checksums(const RunConfig& config) {
  std::map<std::string, std::string> out;
  for (const char* key : {"data", "masks"}) {
    if (const auto path = config.find(key)) out[key] = file_sha256(*path);
  }
  return out;
}

void run_estimate(const RunConfig& config, std::ostream& log) {
  const auto prepared = load_prepared(config, log);
  const auto pc = pipeline_config(config);
  const auto result = estimate_panel(prepared.panel, pc);
  write_estimation(config.out, result, pc.p_mode);
  log_estimation(result, log);
}

void run_calibrate(const RunConfig& config, std::ostream& log) {
  const auto prepared = load_prepared(config, log);
  const auto pc = pipeline_config(config);
  const auto calibrations = calibrate_panel(prepared.panel, pc);
  std::vector<std::string> labels;
  for (Index l = 0; l <= pc.p; ++l) {
    for (Index j = 0; j < pc.r; ++j) labels.push_back(lag_label(j, l));
  }
  write_calibration(config.out, calibrations, labels);
  log << "calibrated " << calibrations.size() << " series\n";
}

void run_decompose(const RunConfig& config, std::ostream& log) {
  const auto prepared = load_prepared(config, log);
  const auto pc = pipeline_config(config);
  const auto factors = extract_factors(prepared.panel.values, pc.r);
  const auto basis = build_lag_matrix(factors.factors, pc.p);
  const auto masks = read_masks(config.get("masks"), basis);
  const auto result = estimate_with_masks(prepared.panel, pc, masks);
  write_estimation(config.out, result, pc.p_mode);
  log_estimation(result, log);
}

void run_simulate(const RunConfig& config, std::ostream& log) {
  const auto name = config.get("model");
  const Index T = config.get_int("T");
  const Index n = config.get_int("n");
  const auto seed = static_cast<std::uint64_t>(config.get_int("seed"));
  const auto loading_seed = static_cast<std::uint64_t>(config.get_int("loading_seed"));
  if (name == "fred_like_raw") {
    FredLikeOptions opts;
    opts.n = n;
    opts.T = T;
    opts.seed = seed;
    opts.loading_seed = loading_seed;
    const auto loaded = fred_like_panel(opts);
    write_panel_csv(config.out / "panel.csv", loaded.panel, loaded.meta, CsvLayout::fredmd);
    log << "wrote raw fredmd-layout panel: " << n << " series, " << loaded.panel.periods() << " periods\n";
    return;
  }
  const auto model = make_model(name, n, loading_seed);
  const auto sim = simulate(model, T, seed, config.get_int("burn_in"));
  const auto panel = simulated_panel(sim);
  write_panel_csv(config.out / "panel.csv", panel, {}, CsvLayout::plain);
  csv::write_matrix(config.out / "chi.csv", sim.chi, panel.series_ids, panel.time_index);
  csv::write_matrix(config.out / "C.csv", sim.common, panel.series_ids, panel.time_index);
  csv::write_matrix(config.out / "e_chi.csv", sim.weak, panel.series_ids, panel.time_index);
  csv::write_matrix(config.out / "xi.csv", sim.xi, panel.series_ids, panel.time_index);
  csv::write_matrix(config.out / "factors.csv", sim.F, numbered("F", model.r), panel.time_index);
  if (model.w > 0) csv::write_matrix(config.out / "weak_factors.csv", sim.F_w, numbered("Fw", model.w), panel.time_index);
  csv::write_matrix(config.out / "shocks.csv", sim.eps, numbered("eps", model.q), panel.time_index);

  const auto shares = population_shares(model);
  Matrix pop(n, 4);
  pop << shares.common, shares.weak, shares.chi, shares.xi;
  const std::vector<std::string> share_labels{"share_C", "share_weak", "share_chi", "share_xi"};
  csv::write_matrix(config.out / "population_shares.csv", pop, share_labels, panel.series_ids, "series");

  const auto mp = check_miniphase(model);
  std::ostringstream info;
  info << "model = " << name << "\nr = " << model.r << "\nq = " << model.q << "\nm = " << model.m
       << "\nw = " << model.w << "\nspectral_radius = " << csv::format_double(spectral_radius(model.M))
       << "\nminiphase = " << (mp.pass ? "pass" : "fail");
  if (!mp.pass) {
    info << "\nminiphase_z = " << csv::format_double(mp.z.real()) << (mp.z.imag() < 0 ? "" : "+")
         << csv::format_double(mp.z.imag()) << "i\nminiphase_rank = " << mp.rank << " of " << mp.required;
  }
  info << '\n';
  write_text(config.out / "model.txt", info.str());
  log << "simulated " << name << ": n = " << n << ", T = " << T << ", seed = " << seed << '\n';
}

void run_montecarlo(const RunConfig& config, std::ostream& log) {
  ExperimentConfig ec;
  ec.experiment = config.get("experiment");
  ec.model = config.get("model");
  ec.n_grid.clear();
  ec.t_grid.clear();
  for (long v : config.get_int_list("n_grid")) ec.n_grid.push_back(v);
  for (long v : config.get_int_list("t_grid")) ec.t_grid.push_back(v);
  ec.replications = config.get_int("replications");
  ec.base_seed = static_cast<std::uint64_t>(config.get_int("seed"));
  ec.loading_seed = static_cast<std::uint64_t>(config.get_int("loading_seed"));
  ec.p = config.get_int("p");
  ec.bandwidth = bandwidth_setting(config);
  ec.burn_in = config.get_int("burn_in");
  ec.threads = std::max(1L, config.get_int("threads"));
  ec.level = config.get_double("level");
  ec.tracked = config.get_int("tracked");
  if (config.has("weak_pairs")) ec.weak_pairs = config.get_int("weak_pairs");

  const auto summary = run_experiment(ec);
  write_summary_csv(config.out / "summary.csv", summary);

  nlohmann::ordered_json j;
  j["experiment"] = summary.experiment;
  j["model"] = summary.model;
  j["replications"] = summary.replications;
  j["failures"] = summary.failures;
  j["failure_messages"] = summary.failure_messages;
  auto& metrics = j["metrics"] = nlohmann::ordered_json::array();
  for (const auto& m : summary.metrics) {
    nlohmann::ordered_json row;
    row["name"] = m.name;
    row["mean"] = std::isfinite(m.mean) ? nlohmann::ordered_json(m.mean) : nlohmann::ordered_json(nullptr);
    row["mcse"] = std::isfinite(m.mcse) ? nlohmann::ordered_json(m.mcse) : nlohmann::ordered_json(nullptr);
    row["count"] = m.count;
    metrics.push_back(row);
  }
  write_text(config.out / "summary.json", j.dump(2) + "\n");
  log << "experiment " << summary.experiment << ": " << summary.replications << " replications, " << summary.failures
      << " failures\n";
}

void run_report(const RunConfig& config, std::ostream& log) {
  const std::filesystem::path input = config.get("input");
  const auto masks = csv::read_table(input / "masks.csv");
  const auto selection = csv::read_table(input / "selection.csv");
  const auto shares = csv::read_table(input / "decomposition" / "shares.csv");

  // share of series selecting each column in the final masks
  std::ostringstream freq;
  freq << "term,share_of_series";
  const bool have_incidence = std::filesystem::exists(input / "calibration" / "incidence");
  if (have_incidence) freq << ",mean_window_share";
  freq << '\n';
  const std::size_t width = masks.header.size() - 1;
  std::vector<double> window_share(width, 0.0);
  Index incidence_series = 0;
  if (have_incidence) {
    for (const auto& row : masks.rows) {
      const auto path = input / "calibration" / "incidence" / (safe_name(row[0]) + ".csv");
      if (!std::filesystem::exists(path)) continue;
      const auto inc = csv::read_table(path);
      if (inc.header.size() != width + 1 || inc.rows.empty()) continue;
      ++incidence_series;
      for (const auto& w : inc.rows) {
        for (std::size_t c = 0; c < width; ++c) {
          if (w[c + 1] == "1") window_share[c] += 1.0 / static_cast<double>(inc.rows.size());
        }
      }
    }
  }
  for (std::size_t c = 0; c < width; ++c) {
    double count = 0.0;
    for (const auto& row : masks.rows) count += row[c + 1] == "1" ? 1.0 : 0.0;
    freq << masks.header[c + 1] << ',' << csv::format_double(count / static_cast<double>(masks.rows.size()));
    if (have_incidence) {
      freq << ',' << csv::format_double(incidence_series ? window_share[c] / static_cast<double>(incidence_series) : 0.0);
    }
    freq << '\n';
  }
  write_text(config.out / "selection_frequency.csv", freq.str());

  // shares ranked by the weak share
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t k = 0; k < shares.rows.size(); ++k) {
    order.emplace_back(*csv::parse_number(shares.rows[k][2], k + 2, 3), k);
  }
  std::stable_sort(order.begin(), order.end(), [](auto a, auto b) { return a.first > b.first; });
  std::ostringstream ranked;
  ranked << "rank";
  for (const auto& h : shares.header) ranked << ',' << csv::escape(h);
  ranked << '\n';
  for (std::size_t k = 0; k < order.size(); ++k) {
    ranked << k + 1;
    for (const auto& v : shares.rows[order[k].second]) ranked << ',' << csv::escape(v);
    ranked << '\n';
  }
  write_text(config.out / "shares_ranked.csv", ranked.str());

  Index ok = 0, tested = 0, rejected = 0;
  for (const auto& row : selection.rows) {
    if (row[1] == "ok") ++ok;
    if (!row[5].empty()) {
      ++tested;
      if (*csv::parse_number(row[7], 0, 8) < 0.05) ++rejected;
    }
  }
  double mean_weak = 0.0, max_weak = 0.0, mean_common = 0.0;
  for (const auto& [w, k] : order) {
    mean_weak += w / static_cast<double>(order.size());
    max_weak = std::max(max_weak, w);
    mean_common += *csv::parse_number(shares.rows[k][1], k + 2, 2) / static_cast<double>(order.size());
  }
  std::ostringstream summary;
  summary << "key,value\nseries," << selection.rows.size() << "\nestimated," << ok << "\nweak_tests," << tested
          << "\nweak_rejections_5pct," << rejected << "\nmean_share_C," << csv::format_double(mean_common)
          << "\nmean_share_weak," << csv::format_double(mean_weak) << "\nmax_share_weak," << csv::format_double(max_weak)
          << '\n';
  write_text(config.out / "summary.csv", summary.str());
  log << "report: " << selection.rows.size() << " series, " << rejected << " weak-factor rejections at 5%\n";
}

}  // namespace gdfm::cli
