#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gdfm/panel.hpp"
#include "gdfm/simulator.hpp"

namespace gdfm {

/// VAR(1) factors F_t = A F_{t-1} + B eps_t written with state (F_t, F_{t-1}),
/// so the weak block is the lagged factor vector.
StateSpaceModel lagged_var_dynamics(const Matrix& a, const Matrix& b);

/// r = 2, q = 1, m = 4: A = [0.6 0.2; -0.3 0.5], b = (1, 0)', normalized.
StateSpaceModel benchmark_dynamics();

/// Benchmark dynamics with n series; strong scale diag(1.2, 0.6), AR(1)
/// idiosyncratic rho = 0.5, coupling 0.2.
LoadingSpec benchmark_loading_spec();
StateSpaceModel benchmark_model(Index n, std::uint64_t loading_seed, const LoadingSpec& spec = benchmark_loading_spec());

/// r = 2, q = 1, m = 2 with A = diag(0.5, 0.5), b = (1, 0)'. The second
/// factor never moves, so the model is left in raw coordinates.
StateSpaceModel example1_dynamics();
StateSpaceModel example1_model(Index n, std::uint64_t loading_seed);

/// F_t = eps_t - 2 eps_{t-1} with state (F_t, eps_t); not minimum phase.
StateSpaceModel ma_failure_model(Index n = 10);

/// One factor, one shock, H = ones.
StateSpaceModel one_factor_model(Index n);

/// r = 8, q = 4, m = 16 lagged VAR resembling a macro panel.
StateSpaceModel fred_like_model(Index n, std::uint64_t loading_seed);

/// Model names accepted by make_model: benchmark, example1, ma_failure,
/// one_factor, fred_like.
std::vector<std::string> model_names();
StateSpaceModel make_model(const std::string& name, Index n, std::uint64_t loading_seed);

struct FredLikeOptions {
  Index n = 120;
  Index T = 764;  // rows after transformation
  std::uint64_t seed = 1;
  std::uint64_t loading_seed = 2023;
  Index outliers = 3;
  std::string first_date = "1959-12";
};

/// Raw-level panel in the fredmd layout: monthly dates, a Transform row of
/// tcodes cycling through all seven codes, a few level outliers and a
/// missing value at the head. After apply_tcodes it has exactly T rows.
LoadedPanel fred_like_panel(const FredLikeOptions& options);

/// Panel wrapper around a simulated y with ids y001.. and periods 1..T.
Panel simulated_panel(const SimulatedPanel& sim);

}  // namespace gdfm
