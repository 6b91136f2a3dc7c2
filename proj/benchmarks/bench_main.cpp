#include <benchmark/benchmark.h>

#include "gdfm/inference.hpp"
#include "gdfm/lag_design.hpp"
#include "gdfm/lasso.hpp"
#include "gdfm/models.hpp"
#include "gdfm/pca.hpp"
#include "gdfm/pipeline.hpp"
#include "gdfm/simulator.hpp"

namespace {

const gdfm::Panel& fred_panel() {
  static const gdfm::Panel panel = gdfm::prepare_panel(gdfm::fred_like_panel({})).panel;
  return panel;
}

void BM_ExtractFactors(benchmark::State& state) {
  const auto& panel = fred_panel();
  for (auto _ : state) benchmark::DoNotOptimize(gdfm::extract_factors(panel.values, 8));
}
BENCHMARK(BM_ExtractFactors)->Unit(benchmark::kMillisecond);

void BM_LassoPath(benchmark::State& state) {
  const auto& panel = fred_panel();
  const auto factors = gdfm::extract_factors(panel.values, 8);
  const auto basis = gdfm::build_lag_matrix(factors.factors, 24);
  const gdfm::Vector y = panel.values.col(2).tail(basis.rows());
  const gdfm::Matrix gram = gdfm::second_moment(basis.design);
  const gdfm::Vector xty = basis.design.transpose() * y / static_cast<double>(basis.rows());
  const auto grid = gdfm::penalty_grid_from_max(gdfm::lasso_lambda_max(xty), state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(gdfm::lasso_path_gram(gram, xty, grid));
}
BENCHMARK(BM_LassoPath)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_CalibrateSeries(benchmark::State& state) {
  const auto& panel = fred_panel();
  const gdfm::RollingCalibrator calibrator(panel.values, {});
  const auto grid = calibrator.default_grid(2);
  for (auto _ : state) benchmark::DoNotOptimize(calibrator.calibrate(2, grid));
}
BENCHMARK(BM_CalibrateSeries)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_HacAvar(benchmark::State& state) {
  const auto model = gdfm::benchmark_model(200, 20240101);
  const auto sim = gdfm::simulate(model, state.range(0), 1);
  const auto basis = gdfm::build_lag_matrix(sim.F, 4);
  auto mask = gdfm::SelectionMask::none(basis.columns());
  for (auto c : gdfm::oracle_basis(model, 4)) mask.selected[static_cast<std::size_t>(c)] = true;
  const auto design = gdfm::apply_mask(basis, mask).design;
  const gdfm::Vector y = sim.y.col(5).tail(basis.rows());
  const auto fit = gdfm::ols(design, y);
  for (auto _ : state) benchmark::DoNotOptimize(gdfm::hac_avar(design, fit.residuals));
}
BENCHMARK(BM_HacAvar)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_Simulate(benchmark::State& state) {
  const auto model = gdfm::benchmark_model(200, 20240101);
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(gdfm::simulate(model, 1000, seed++));
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
