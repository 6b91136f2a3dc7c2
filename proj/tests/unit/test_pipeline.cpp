#include <gtest/gtest.h>

#include <sstream>

#include "gdfm/errors.hpp"
#include "gdfm/models.hpp"
#include "gdfm/pipeline.hpp"
#include "gdfm/simulator.hpp"
#include "oracles.hpp"

namespace gdfm {
namespace {

PipelineConfig small_config() {
  PipelineConfig config;
  config.r = 2;
  config.p = 2;
  config.window = 80;
  config.grid_size = 10;
  config.grid_ratio = 1e-2;
  return config;
}

Panel small_panel() {
  const auto sim = simulate(benchmark_model(40, 3), 160, 4);
  return standardize(simulated_panel(sim));
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

TEST(PreparePanel, FredLikePanel) {
  const auto prepared = prepare_panel(fred_like_panel({}));
  EXPECT_EQ(prepared.panel.periods(), 764);
  EXPECT_EQ(prepared.panel.num_series(), 120);
  EXPECT_TRUE(prepared.panel.standardized);
  EXPECT_TRUE(prepared.panel.values.allFinite());
  const Vector means = prepared.panel.values.colwise().mean();
  EXPECT_LT(means.cwiseAbs().maxCoeff(), 1e-12);
  ASSERT_EQ(prepared.outliers.imputations.size(), 3u);
  EXPECT_EQ(prepared.outliers.imputations[0].series, "INDPRO");
  EXPECT_EQ(prepared.outliers.imputations[0].time, "1/1/1976");
}

TEST(EstimatePanel, ChainIdentities) {
  const Panel panel = small_panel();
  const auto result = estimate_panel(panel, small_config());
  ASSERT_EQ(result.series.size(), 40u);
  ASSERT_EQ(result.calibrations.size(), 40u);
  const auto& d = result.decomposition;
  EXPECT_EQ(d.y.rows(), 158);
  EXPECT_LT((d.common + d.weak + d.xi - d.y).cwiseAbs().maxCoeff(), 1e-12);
  const Matrix f = result.factors.factors.bottomRows(158);
  EXPECT_LT((f.transpose() * d.weak / 158.0).cwiseAbs().maxCoeff(), 1e-8);
  for (const auto& s : result.series) {
    if (s.status != "ok") continue;
    EXPECT_EQ(s.lambda, result.calibrations[static_cast<std::size_t>(s.column)].result.optimal_penalty);
    EXPECT_EQ(s.inference.beta.size(), s.mask.count());
  }
  EXPECT_EQ(result.shares.size(), 40u);
}

TEST(EstimatePanel, OversizedPenaltyEmptiesEverySeries) {
  auto config = small_config();
  config.lambda = 1e6;
  const auto result = estimate_panel(small_panel(), config);
  EXPECT_TRUE(result.calibrations.empty());
  for (const auto& s : result.series) EXPECT_EQ(s.status, "empty_selection");
  EXPECT_EQ(result.decomposition.chi, Matrix::Zero(158, 40));
}

TEST(EstimatePanel, ThreadCountDoesNotChangeResults) {
  const Panel panel = small_panel();
  auto config = small_config();
  const auto a = estimate_panel(panel, config);
  config.threads = 2;
  const auto b = estimate_panel(panel, config);
  EXPECT_EQ(a.decomposition.chi, b.decomposition.chi);
  for (std::size_t i = 0; i < a.series.size(); ++i) EXPECT_EQ(a.series[i].mask.selected, b.series[i].mask.selected);
}

TEST(EstimatePanel, SeriesSubset) {
  auto config = small_config();
  config.series = {"y003", "y010"};
  const auto result = estimate_panel(small_panel(), config);
  ASSERT_EQ(result.series.size(), 2u);
  EXPECT_EQ(result.series[1].id, "y010");
  EXPECT_EQ(result.series[1].column, 9);
  EXPECT_EQ(result.decomposition.y.cols(), 2);
  config.series = {"missing"};
  EXPECT_THROW(estimate_panel(small_panel(), config), ConfigError);
}

TEST(EstimateWithMasks, ContemporaneousMasksHaveNoWeakPart) {
  const Panel panel = small_panel();
  std::map<std::string, SelectionMask> masks;
  for (const auto& id : panel.series_ids) masks[id] = SelectionMask::contemporaneous(2, 2);
  const auto result = estimate_with_masks(panel, small_config(), masks);
  EXPECT_LT(result.decomposition.weak.cwiseAbs().maxCoeff(), 1e-12);
  for (const auto& s : result.series) EXPECT_EQ(s.weak.note, "no weak-factor candidates");
  masks.erase("y001");
  EXPECT_THROW(estimate_with_masks(panel, small_config(), masks), ConfigError);
}

TEST(WriteEstimation, OutputsRoundTrip) {
  const Panel panel = small_panel();
  auto config = small_config();
  config.series = {"y001", "y002", "y021"};
  const auto result = estimate_panel(panel, config);
  const auto dir = testing::fresh_dir("pipeline_out");
  write_estimation(dir, result, PValueMode::two_sided);
  const auto files = testing::list_files(dir);
  for (const char* name : {"factors.csv", "loadings.csv", "masks.csv", "selection.csv", "decomposition/shares.csv",
                           "calibration/calibration.csv", "calibration/lambda_path.csv", "calibration/incidence/y021.csv"}) {
    EXPECT_NE(std::find(files.begin(), files.end(), name), files.end()) << name;
  }
  const auto masks = read_masks(dir / "masks.csv", result.basis);
  ASSERT_EQ(masks.size(), 3u);
  for (const auto& s : result.series) EXPECT_EQ(masks.at(s.id).selected, s.mask.selected);
  for (const auto& s : result.series) {
    if (s.status != "ok") continue;
    const std::string table = testing::read_file(dir / "tables" / (s.id + ".csv"));
    EXPECT_EQ(first_line(table), "term,Estimate,Std. error,t value,Pr(>|t|),stars");
    std::istringstream lines(table);
    std::string line;
    std::getline(lines, line);
    Index rows = 0;
    while (std::getline(lines, line)) {
      EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5) << line;
      ++rows;
    }
    EXPECT_EQ(rows, s.mask.count());
  }
}

TEST(SafeName, ReplacesUnsafeCharacters) {
  EXPECT_EQ(safe_name("S&P 500"), "S_P_500");
  EXPECT_EQ(safe_name("CPIAUCSL"), "CPIAUCSL");
  EXPECT_EQ(safe_name(""), "_");
  EXPECT_EQ(safe_name("a/b.c"), "a_b.c");
}

}  // namespace
}  // namespace gdfm
