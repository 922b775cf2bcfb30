#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gcmm/config.hpp"
#include "gcmm/data.hpp"
#include "gcmm/eval.hpp"
#include "gcmm/math.hpp"
#include "gcmm/model.hpp"

namespace gcmm {

// Analytic marginal family for ground-truth generators. The heavy-tailed
// options exist so benchmarks can stress the regime the copula mixture is
// built for.
struct MarginalSpec {
  enum class Family { gaussian, lognormal, student_t };
  Family family = Family::gaussian;
  double mu = 0.0;     // gaussian / lognormal location
  double sigma = 1.0;  // gaussian / lognormal scale
  double nu = 5.0;     // student_t degrees of freedom
  double loc = 0.0;    // student_t location
  double scale = 1.0;  // student_t scale

  double quantile(double u) const;
  void validate() const;
};

// One mixture component: an equicorrelation coefficient and one marginal
// family per dimension.
struct ComponentSpec {
  double rho = 0.0;
  std::vector<MarginalSpec> margins;
};

struct GeneratorSpec {
  int d = 2;
  Eigen::VectorXd weights;
  std::vector<ComponentSpec> components;

  void validate() const;
};

// Three-component heavy-tailed default used by the benchmark when no spec
// file is given: D=2, rho = (0.8, -0.5, 0.2), lognormal(0, 0.6) margins,
// uniform weights.
GeneratorSpec default_benchmark_spec();

// JSON with schema tag "gcmm-bench-spec-v1".
std::string serialize_spec(const GeneratorSpec& spec);
GeneratorSpec deserialize_spec(std::string_view bytes);
void save_spec(const GeneratorSpec& spec, const std::string& path);
GeneratorSpec load_spec(const std::string& path);

// Exact mixture as a GcmmModel: equicorrelation matrices from rho and
// marginal estimators tabulated on 10^4 analytic quantile knots.
GcmmModel make_ground_truth(const GeneratorSpec& spec);

// Splits rows into ceil(keep_fraction * N) synchronized rows (a uniform
// subset, kept in original order) and per-dimension pools holding the
// remaining rows' values. With empty drop_rates every dropped row reaches
// every pool, so sync rows + pool size = N per dimension; a per-dimension
// drop rate removes pool entries independently with that probability.
std::pair<SyncDataset, UnsyncDataset> desynchronize(const SyncDataset& data,
                                                    double keep_fraction, Rng& rng,
                                                    std::span<const double> drop_rates = {});

struct BenchmarkOptions {
  Eigen::Index n = 3000;          // generated rows, then desynchronized
  Eigen::Index holdout_n = 3000;  // fresh ground-truth rows for the KS reference
  Eigen::Index resample_n = 3000; // draws from each fitted model
  double keep_fraction = 0.6;
  std::vector<double> drop_rates;           // empty or one rate per dimension
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int k_min = 1;   // K search range when fixed_k == 0
  int k_max = 6;
  int fixed_k = 0; // > 0 pins K for every method
  FitConfig fit;   // k and seed are overridden per run
  double marginal_param_cost = 0.0;
};

struct BenchmarkMethodResult {
  int k = 0;
  double ks_statistic = 0.0;
  double p_value = 0.0;
  bool converged = false;
};

struct BenchmarkSeedRow {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when ok is false
  BenchmarkMethodResult gmm;
  BenchmarkMethodResult gcmm;
  BenchmarkMethodResult gcmm_unsync;
};

struct BenchmarkReport {
  GeneratorSpec spec;
  BenchmarkOptions options;
  std::vector<BenchmarkSeedRow> rows;  // one per seed, in input order
  // Medians of the KS p-values over the successful seeds; NaN when none.
  double median_p_gmm = 0.0;
  double median_p_gcmm = 0.0;
  double median_p_gcmm_unsync = 0.0;
};

// Per seed: generate, desynchronize, fit all three methods at their
// selected K, resample each fit, and KS-test the per-row sums against the
// holdout's sums. A seed that fails is recorded and skipped. The report is
// byte-reproducible for identical inputs.
BenchmarkReport run_benchmark(const GeneratorSpec& spec, const BenchmarkOptions& options);

// JSON with schema tag "gcmm-bench-report-v1".
std::string benchmark_report_json(const BenchmarkReport& report);
std::string benchmark_report_text(const BenchmarkReport& report);

// Writes per-dimension and per-row-sum histogram and quantile-quantile
// CSVs comparing the dataset against a model resample of resample_n rows:
// hist_<name>.csv, qq_<name>.csv, hist_sum.csv, qq_sum.csv.
void export_plot_data(const GcmmModel& model, const SyncDataset& data,
                      const std::string& out_dir, Eigen::Index resample_n, Rng& rng);

}  // namespace gcmm
