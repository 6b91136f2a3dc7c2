// Runs every acceptance criterion at full scale and prints one PASS/FAIL line
// per criterion. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "gdfm/lag_design.hpp"
#include "gdfm/lasso.hpp"
#include "gdfm/models.hpp"
#include "gdfm/montecarlo.hpp"
#include "gdfm/panel.hpp"
#include "gdfm/pca.hpp"
#include "gdfm/pipeline.hpp"
#include "gdfm/simulator.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace gdfm;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(gen);
  return m;
}

int cli_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << "gdfm " << args.front() << " failed: " << err.str();
  return code;
}

Matrix read_numeric(const fs::path& path) {
  const auto loaded = load_csv(path, CsvLayout::plain);
  return loaded.panel.values;
}

bool same_outputs(const fs::path& a, const fs::path& b, std::string& diff) {
  auto files = testing::list_files(a);
  auto other = testing::list_files(b);
  std::erase(files, "manifest.toml");
  std::erase(other, "manifest.toml");
  if (files != other) {
    diff = "file lists differ";
    return false;
  }
  for (const auto& f : files) {
    if (testing::read_file(a / f) != testing::read_file(b / f)) {
      diff = f;
      return false;
    }
  }
  return true;
}

ExperimentConfig experiment(const std::string& name, Index reps) {
  ExperimentConfig c;
  c.experiment = name;
  c.n_grid = {200};
  c.t_grid = {1000};
  c.replications = reps;
  return c;
}

Verdict coverage() {
  Verdict v;
  const auto s = run_experiment(experiment("coverage", 500));
  Index checked = 0;
  double cell_lo = 1.0, cell_hi = 0.0;
  for (const auto& m : s.metrics) {
    if (m.name.starts_with("coverage[F")) {
      ++checked;
      v.require(m.mean >= 0.90 && m.mean <= 0.975, m.name + " = " + std::to_string(m.mean));
      v.detail << m.name << " = " << m.mean << "; ";
    } else if (m.name.starts_with("coverage[y")) {
      cell_lo = std::min(cell_lo, m.mean);
      cell_hi = std::max(cell_hi, m.mean);
    }
  }
  v.require(checked > 0, "no coverage metrics");
  v.require(s.failures == 0, "failed replications");
  v.detail << "per-series cells in [" << cell_lo << ", " << cell_hi << "]";
  return v;
}

Verdict rates() {
  Verdict v;
  auto c = experiment("rates", 100);
  c.n_grid = {50, 100, 200, 400};
  c.t_grid = {50, 100, 200, 400};
  const auto s = run_experiment(c);
  const double slope = s.metric("knorm_slope").mean;
  const double mse100 = s.metric("chi_mse[n=100,T=100]").mean;
  const double mse400 = s.metric("chi_mse[n=400,T=400]").mean;
  v.require(slope >= 0.7 && slope <= 1.3, "slope");
  v.require(mse400 < 0.5 * mse100, "chi MSE ratio");
  v.detail << "slope " << slope << ", chi_mse " << mse100 << " -> " << mse400 << " (ratio " << mse400 / mse100 << ")";
  return v;
}

Verdict example_one() {
  Verdict v;
  const auto model = example1_model(10, 1);
  const Matrix a = 0.5 * Matrix::Identity(2, 2);
  const Matrix b = (Matrix(2, 1) << 1, 0).finished();
  const Matrix sigma = testing::lyapunov_series(a, b * b.transpose());
  Matrix oracle(4, 4);
  oracle << sigma, a * sigma, sigma * a.transpose(), sigma;
  Vector values;
  Matrix vectors;
  testing::jacobi_eigen(oracle, values, vectors);
  v.require(values(3) <= 1e-14 * values(0), "oracle Gram has no zero eigenvalue");
  v.require((population_lag_gram(model, 1) - oracle).cwiseAbs().maxCoeff() < 1e-12, "population Gram");

  const Vector dir = (Vector(4) << 0, 1, 0, -0.5).finished().normalized();
  v.require((oracle * dir).norm() < 1e-12, "oracle direction");
  const auto pop = gram_rank_check_gram(population_lag_gram(model, 1), 1e-8);
  const double pop_angle = std::acos(std::min(1.0, (pop.kernel.transpose() * dir).norm()));
  v.require(!pop.full_rank && pop_angle < 1e-6, "population kernel angle");

  const auto sim = simulate(model, 10000, 7);
  const auto sample = gram_rank_check(build_lag_matrix(sim.F, 1).design, 1e-8);
  v.require(!sample.full_rank, "sample Gram not flagged deficient");
  const double sample_angle =
      sample.kernel.cols() ? std::acos(std::min(1.0, (sample.kernel.transpose() * dir).norm())) : M_PI;
  v.require(sample_angle < 1e-6, "sample kernel angle");
  v.detail << "smallest oracle eigenvalue " << values(3) << ", sample rank " << sample.rank << " of 4, angles "
           << pop_angle << " / " << sample_angle;
  return v;
}

Verdict lasso() {
  Verdict v;
  double ols_gap = 0.0, soft_gap = 0.0;
  bool empty = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix x = random_matrix(150, 10, seed);
    const Vector y = x * Vector::LinSpaced(10, -1.0, 1.0) + random_matrix(150, 1, 100 + seed);
    const Vector ols = testing::gauss_jordan_solve(x.transpose() * x, x.transpose() * y);
    ols_gap = std::max(ols_gap, (lasso_solve(x, y, 0.0).coefficients - ols).cwiseAbs().maxCoeff());

    const Matrix q = std::sqrt(150.0) * Matrix(x.householderQr().householderQ() * Matrix::Identity(150, 10));
    const Vector z = q.transpose() * y / 150.0;
    for (double lambda : {0.01, 0.1, 0.5}) {
      const auto fit = lasso_solve(q, y, lambda);
      for (Index j = 0; j < 10; ++j) {
        const double expect = std::copysign(std::max(std::abs(z(j)) - lambda, 0.0), z(j));
        soft_gap = std::max(soft_gap, std::abs(fit.coefficients(j) - expect));
      }
    }
    const double lmax = (x.transpose() * y / 150.0).cwiseAbs().maxCoeff();
    for (double lambda : {lmax, 2.0 * lmax}) {
      const auto fit = lasso_solve(x, y, lambda);
      empty = empty && fit.active_set.empty() && (fit.coefficients.array() == 0.0).all();
    }
  }
  v.require(ols_gap <= 1e-8, "lambda = 0 vs OLS");
  v.require(soft_gap <= 1e-8, "soft threshold");
  v.require(empty, "lambda_max");
  v.detail << "max |lasso(0) - ols| " << ols_gap << ", max soft-threshold gap " << soft_gap;
  return v;
}

Verdict weak_test() {
  Verdict v;
  const double size = run_experiment(experiment("weak_size", 1000)).metric("rejection_rate").mean;
  const double power = run_experiment(experiment("weak_power", 200)).metric("rejection_rate").mean;
  v.require(size >= 0.02 && size <= 0.09, "size");
  v.require(power > 0.9, "power");
  v.detail << "size " << size << " over 1000 replications, power " << power;
  return v;
}

void check_identities(Verdict& v, const Matrix& y, const Matrix& c, const Matrix& e, const Matrix& xi,
                      const Matrix& factors, double& add_gap, double& orth_gap) {
  const double add = (c + e + xi - y).cwiseAbs().maxCoeff();
  const Matrix ef = e.rowwise() - e.colwise().mean();
  const Matrix ff = factors.rowwise() - factors.colwise().mean();
  const double orth = (ff.transpose() * ef / static_cast<double>(y.rows())).cwiseAbs().maxCoeff();
  add_gap = std::max(add_gap, add);
  orth_gap = std::max(orth_gap, orth);
  v.require(add <= 1e-12, "additivity");
  v.require(orth <= 1e-8, "orthogonality");
}

Verdict decomposition_identities(const fs::path& pipeline_dir) {
  Verdict v;
  double add_gap = 0.0, orth_gap = 0.0;
  PipelineConfig config;
  config.r = 2;
  config.p = 4;
  config.lambda = 0.005;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto sim = simulate(benchmark_model(200, seed), 1000, seed);
    const auto result = estimate_panel(standardize(simulated_panel(sim)), config);
    const auto& d = result.decomposition;
    const Matrix f = result.factors.factors.bottomRows(d.y.rows());
    check_identities(v, d.y, d.common, d.weak, d.xi, f, add_gap, orth_gap);
  }
  const fs::path dec = pipeline_dir / "decomposition";
  if (fs::exists(dec / "C_hat.csv")) {
    const Matrix c = read_numeric(dec / "C_hat.csv");
    const Matrix e = read_numeric(dec / "e_chi_hat.csv");
    const Matrix xi = read_numeric(dec / "xi_hat.csv");
    const Matrix chi = read_numeric(dec / "chi_hat.csv");
    const Matrix y = chi + xi;
    const Matrix f = read_numeric(pipeline_dir / "factors.csv").bottomRows(y.rows());
    double add = 0.0, orth = 0.0;
    Verdict csv_check;
    check_identities(csv_check, y, c, e, xi, f, add, orth);
    v.require((c + e - chi).cwiseAbs().maxCoeff() <= 1e-12, "pipeline chi = C + e");
    v.require(orth <= 1e-8, "pipeline orthogonality");
    orth_gap = std::max(orth_gap, orth);
  } else {
    v.require(false, "pipeline output missing");
  }
  v.detail << "max additivity error " << add_gap << ", max factor covariance " << orth_gap;
  return v;
}

Verdict weak_share() {
  Verdict v;
  const auto s = run_experiment(experiment("weak_share", 100));
  const double est = s.metric("share_weak").mean;
  double pop = 0.0;
  Index count = 0;
  for (const auto& m : s.metrics) {
    if (m.name.starts_with("population_share_weak[")) {
      pop += m.mean;
      ++count;
    }
  }
  pop /= static_cast<double>(std::max<Index>(count, 1));
  v.require(std::abs(pop - 0.4) < 1e-9, "population share is not 0.4");
  v.require(std::abs(est - 0.4) <= 0.1, "estimated share");
  v.detail << "estimated " << est << " vs population " << pop;
  return v;
}

Index csv_rows(const std::string& text) { return static_cast<Index>(std::count(text.begin(), text.end(), '\n')) - 1; }

Verdict pipeline(const fs::path& root) {
  Verdict v;
  const auto data_dir = root / "fred_like";
  v.require(cli_run({"simulate", "--model", "fred_like_raw", "--n", "120", "--T", "764", "--out",
                     data_dir.string()}) == 0,
            "simulate");
  const auto start = std::chrono::steady_clock::now();
  const int code = cli_run({"estimate", "--data", (data_dir / "panel.csv").string(), "--out", (root / "est").string()});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  v.require(code == 0, "estimate");
  v.require(seconds < 300.0, "runtime");
  if (code != 0) return v;

  const std::string manifest = testing::read_file(root / "est" / "manifest.toml");
  for (const char* key : {"r = \"8\"", "p = \"24\"", "window = \"488\"", "calib_frac = \"0.8\""}) {
    v.require(manifest.find(key) != std::string::npos, key);
  }
  v.require(csv_rows(testing::read_file(root / "est" / "prepared_panel.csv")) == 764, "764 periods");
  v.require(csv_rows(testing::read_file(root / "est" / "decomposition" / "shares.csv")) == 120, "shares rows");
  Index tables = 0, rows = 0;
  bool layout = true;
  for (const auto& f : testing::list_files(root / "est" / "tables")) {
    std::istringstream in(testing::read_file(root / "est" / "tables" / f));
    std::string line;
    std::getline(in, line);
    layout = layout && line == "term,Estimate,Std. error,t value,Pr(>|t|),stars";
    while (std::getline(in, line)) {
      layout = layout && std::count(line.begin(), line.end(), ',') == 5;
      ++rows;
    }
    ++tables;
  }
  v.require(tables > 0 && layout, "five-column tables");
  v.detail << "estimate took " << seconds << " s; " << tables << " coefficient tables, " << rows << " rows";
  return v;
}

Verdict determinism(const fs::path& root) {
  Verdict v;
  const std::string data = (root / "fred_like" / "panel.csv").string();
  const std::string subset = "INDPRO,UNRATE,GS10,SER015,SER040,SER077";
  struct Run {
    std::string name;
    std::vector<std::string> args;
  };
  const std::vector<Run> runs{
      {"simulate", {"simulate", "--n", "60", "--T", "300", "--seed", "5"}},
      {"simulate_raw", {"simulate", "--model", "fred_like_raw", "--n", "120", "--T", "764"}},
      {"estimate", {"estimate", "--data", data, "--series", subset}},
      {"calibrate", {"calibrate", "--data", data, "--series", subset}},
      {"montecarlo", {"montecarlo", "--experiment", "coverage", "--replications", "40"}},
      {"decompose",
       {"decompose", "--data", data, "--masks", (root / "est" / "masks.csv").string(), "--series", subset}},
      {"report", {"report", "--input", (root / "est").string()}},
  };
  for (const auto& run : runs) {
    const auto first = root / "det" / run.name / "first";
    auto args = run.args;
    args.insert(args.end(), {"--out", first.string()});
    if (cli_run(args) != 0) {
      v.require(false, run.name + " run");
      continue;
    }
    std::string diff;
    for (const char* threads : {"1", "2"}) {
      const auto again = root / "det" / run.name / (std::string("rerun") + threads);
      const int code =
          cli_run({"rerun", "--manifest", (first / "manifest.toml").string(), "--threads", threads, "--out",
                   again.string()});
      v.require(code == 0 && same_outputs(first, again, diff),
                run.name + " rerun threads=" + threads + (diff.empty() ? "" : " differs in " + diff));
    }
    v.detail << run.name << " ";
  }
  v.detail << "reproduced from their manifests with 1 and 2 threads";
  return v;
}

}  // namespace

int main() {
  const fs::path root = testing::fresh_dir("acceptance");
  int failed = 0;
  auto report = [&](int id, const std::string& name, const std::function<Verdict()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !v.pass;
    std::printf("%s %d %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.str().c_str(),
                seconds);
    std::fflush(stdout);
  };
  report(1, "coverage", coverage);
  report(2, "consistency rates", rates);
  report(3, "singular design detection", example_one);
  report(4, "lasso correctness", lasso);
  report(5, "weak-factor test size and power", weak_test);
  report(8, "pipeline parity", [&] { return pipeline(root); });
  report(6, "decomposition identities", [&] { return decomposition_identities(root / "est"); });
  report(7, "weak-share recovery", weak_share);
  report(9, "determinism", [&] { return determinism(root); });
  std::printf("%d of 9 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
