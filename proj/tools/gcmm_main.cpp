#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gcmm/data.hpp"
#include "gcmm/em.hpp"
#include "gcmm/errors.hpp"
#include "gcmm/eval.hpp"
#include "gcmm/experiment.hpp"
#include "gcmm/gmm.hpp"
#include "gcmm/model.hpp"
#include "gcmm/threads.hpp"

namespace {

struct CommonArgs {
  std::uint64_t seed = 0;
  int threads = 0;
  bool json = false;
};

void add_common(CLI::App* sub, CommonArgs* args) {
  sub->add_option("--seed", args->seed, "RNG seed (default 0)");
  sub->add_option("--threads", args->threads,
                  "Worker thread cap (default: GCMM_THREADS env, then hardware)");
  sub->add_flag("--json", args->json, "Emit machine-readable JSON on stdout");
}

void apply_threads(const CommonArgs& args) {
  if (args.threads > 0) gcmm::set_num_threads(args.threads);
}

struct FitArgs {
  CommonArgs common;
  std::string data_path;
  std::string unsync_dir;
  std::string model_out;
  int k = 1;
  double tol = 1e-6;
  int max_iters = 500;
  double weight_floor = 1e-6;
  double ridge = 1e-6;
  bool use_unsync = false;
};

void add_fit_options(CLI::App* sub, FitArgs* args, bool with_unsync) {
  sub->add_option("--data", args->data_path, "Training CSV (header + one row per observation)")
      ->required();
  sub->add_option("--k", args->k, "Component count")->required();
  sub->add_option("--model-out", args->model_out, "Output model JSON path")->required();
  sub->add_option("--tol", args->tol, "Relative log-likelihood stopping tolerance");
  sub->add_option("--max-iters", args->max_iters, "Iteration cap");
  sub->add_option("--weight-floor", args->weight_floor, "Minimum component weight");
  sub->add_option("--ridge", args->ridge, "Correlation/covariance ridge");
  if (with_unsync) {
    sub->add_option("--unsync-dir", args->unsync_dir,
                    "Directory of per-dimension CSVs with unpaired observations");
    sub->add_flag("--use-unsync", args->use_unsync,
                  "Pool unsynchronized observations into the marginals (implied by --unsync-dir)");
  }
}

gcmm::FitConfig config_from(const FitArgs& args) {
  gcmm::FitConfig cfg;
  cfg.k = args.k;
  cfg.seed = args.common.seed;
  cfg.tol = args.tol;
  cfg.max_iters = args.max_iters;
  cfg.weight_floor = args.weight_floor;
  cfg.ridge = args.ridge;
  return cfg;
}

void print_fit_summary(const CommonArgs& common, const gcmm::EmTrace& trace,
                       const std::string& model_out) {
  double final_ll = trace.log_likelihoods.empty() ? 0.0 : trace.log_likelihoods.back();
  if (common.json) {
    nlohmann::ordered_json j;
    j["model"] = model_out;
    j["iterations"] = trace.iterations_run;
    j["converged"] = trace.converged;
    j["log_likelihood"] = final_ll;
    std::cout << j.dump(2) << "\n";
  } else {
    char line[256];
    std::snprintf(line, sizeof(line),
                  "wrote %s after %d iterations (converged: %s, log-likelihood: %.6f)\n",
                  model_out.c_str(), trace.iterations_run, trace.converged ? "yes" : "no",
                  final_ll);
    std::cout << line;
  }
}

int run_fit(const FitArgs& args) {
  apply_threads(args.common);
  gcmm::SyncDataset data = gcmm::load_sync_csv(args.data_path);
  std::optional<gcmm::UnsyncDataset> pools;
  gcmm::FitConfig cfg = config_from(args);
  if (!args.unsync_dir.empty()) {
    pools = gcmm::load_unsync_dir(args.unsync_dir, data.dimension_names);
    cfg.use_unsync = true;
  } else if (args.use_unsync) {
    throw gcmm::DataError("--use-unsync requires --unsync-dir");
  }
  auto [model, trace] = gcmm::fit(data, pools, cfg);
  gcmm::save_model(model, args.model_out);
  print_fit_summary(args.common, trace, args.model_out);
  return 0;
}

int run_fit_gmm(const FitArgs& args) {
  apply_threads(args.common);
  gcmm::SyncDataset data = gcmm::load_sync_csv(args.data_path);
  auto [model, trace] = gcmm::fit_gmm(data, config_from(args));
  gcmm::save_gmm(model, args.model_out);
  print_fit_summary(args.common, trace, args.model_out);
  return 0;
}

struct SelectKArgs {
  CommonArgs common;
  std::string data_path;
  std::string unsync_dir;
  int k_min = 1;
  int k_max = 6;
  double tol = 1e-6;
  int max_iters = 500;
  bool gmm = false;
  double marginal_param_cost = 0.0;
};

int run_select_k(const SelectKArgs& args) {
  apply_threads(args.common);
  gcmm::SyncDataset data = gcmm::load_sync_csv(args.data_path);
  std::optional<gcmm::UnsyncDataset> pools;
  gcmm::FitConfig cfg;
  cfg.seed = args.common.seed;
  cfg.tol = args.tol;
  cfg.max_iters = args.max_iters;
  if (!args.unsync_dir.empty()) {
    pools = gcmm::load_unsync_dir(args.unsync_dir, data.dimension_names);
    cfg.use_unsync = true;
  }
  auto report = gcmm::select_k(data, pools, args.k_min, args.k_max, cfg,
                               args.gmm ? gcmm::ModelKind::gmm : gcmm::ModelKind::gcmm,
                               args.marginal_param_cost);
  std::cout << (args.common.json ? gcmm::select_k_report_json(report)
                                 : gcmm::select_k_report_text(report));
  return 0;
}

struct SampleArgs {
  CommonArgs common;
  std::string model_path;
  std::string out_path;
  Eigen::Index n = 1000;
};

int run_sample(const SampleArgs& args) {
  apply_threads(args.common);
  std::ifstream in(args.model_path);
  if (!in) throw gcmm::DataError("cannot open " + args.model_path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::string schema;
  try {
    schema = nlohmann::json::parse(bytes).value("schema", "");
  } catch (const nlohmann::json::exception& e) {
    throw gcmm::DataError(std::string("invalid model JSON: ") + e.what());
  }

  gcmm::Rng rng(args.common.seed);
  gcmm::SyncDataset sample;
  if (schema == "gmm-v1") {
    sample = gcmm::sample_gmm_dataset(gcmm::deserialize_gmm(bytes), args.n, rng);
  } else {
    sample = gcmm::sample_gcmm(gcmm::deserialize_model(bytes), args.n, rng);
  }
  gcmm::save_sync_csv(sample, args.out_path);
  if (args.common.json) {
    nlohmann::ordered_json j;
    j["rows"] = args.n;
    j["path"] = args.out_path;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "wrote " << args.n << " rows to " << args.out_path << "\n";
  }
  return 0;
}

struct KsArgs {
  CommonArgs common;
  std::string a_path;
  std::string b_path;
};

int run_ks(const KsArgs& args) {
  gcmm::SyncDataset a = gcmm::load_sync_csv(args.a_path);
  gcmm::SyncDataset b = gcmm::load_sync_csv(args.b_path);
  if (a.d() != b.d()) throw gcmm::DataError("KS inputs must have the same column count");

  struct Row {
    std::string name;
    gcmm::KsResult result;
  };
  std::vector<Row> rows;
  auto col_span = [](const gcmm::SyncDataset& ds, Eigen::Index i) {
    return std::span<const double>(ds.values.col(i).data(),
                                   static_cast<std::size_t>(ds.values.rows()));
  };
  for (Eigen::Index i = 0; i < a.d(); ++i) {
    std::string name = i < static_cast<Eigen::Index>(a.dimension_names.size())
                           ? a.dimension_names[static_cast<std::size_t>(i)]
                           : "x" + std::to_string(i + 1);
    rows.push_back({std::move(name), gcmm::ks_two_sample(col_span(a, i), col_span(b, i))});
  }
  if (a.d() > 1) {
    Eigen::VectorXd sa = gcmm::sum_dimension(a);
    Eigen::VectorXd sb = gcmm::sum_dimension(b);
    rows.push_back({"sum", gcmm::ks_two_sample(
                               {sa.data(), static_cast<std::size_t>(sa.size())},
                               {sb.data(), static_cast<std::size_t>(sb.size())})});
  }

  if (args.common.json) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
      nlohmann::ordered_json r;
      r["column"] = row.name;
      r["n1"] = row.result.n1;
      r["n2"] = row.result.n2;
      r["statistic"] = row.result.statistic;
      r["p_value"] = row.result.p_value;
      j.push_back(std::move(r));
    }
    std::cout << j.dump(2) << "\n";
  } else {
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s %8s %8s %10s %10s\n", "column", "n1", "n2",
                  "statistic", "p");
    std::cout << line;
    for (const auto& row : rows) {
      std::snprintf(line, sizeof(line), "%-12s %8lld %8lld %10.6f %10.6f\n", row.name.c_str(),
                    static_cast<long long>(row.result.n1), static_cast<long long>(row.result.n2),
                    row.result.statistic, row.result.p_value);
      std::cout << line;
    }
  }
  return 0;
}

struct BenchmarkArgs {
  CommonArgs common;
  std::string spec_path;
  std::string out_path;
  int seed_count = 5;
  gcmm::BenchmarkOptions options;
};

int run_benchmark_cmd(const BenchmarkArgs& args) {
  apply_threads(args.common);
  gcmm::GeneratorSpec spec = args.spec_path.empty() ? gcmm::default_benchmark_spec()
                                                    : gcmm::load_spec(args.spec_path);
  gcmm::BenchmarkOptions options = args.options;
  options.seeds.clear();
  for (int s = 1; s <= args.seed_count; ++s) {
    options.seeds.push_back(args.common.seed + static_cast<std::uint64_t>(s));
  }
  gcmm::BenchmarkReport report = gcmm::run_benchmark(spec, options);
  std::string json = gcmm::benchmark_report_json(report);
  if (!args.out_path.empty()) {
    std::ofstream out(args.out_path);
    if (!out) throw gcmm::DataError("cannot open " + args.out_path + " for writing");
    out << json;
    if (!out) throw gcmm::DataError("failed to write " + args.out_path);
  }
  std::cout << (args.common.json ? json : gcmm::benchmark_report_text(report));
  return 0;
}

struct ExportPlotsArgs {
  CommonArgs common;
  std::string model_path;
  std::string data_path;
  std::string out_dir;
  Eigen::Index n = 10000;
};

int run_export_plots(const ExportPlotsArgs& args) {
  apply_threads(args.common);
  gcmm::GcmmModel model = gcmm::load_model(args.model_path);
  gcmm::SyncDataset data = gcmm::load_sync_csv(args.data_path);
  gcmm::Rng rng(args.common.seed);
  gcmm::export_plot_data(model, data, args.out_dir, args.n, rng);
  if (args.common.json) {
    nlohmann::ordered_json j;
    j["out_dir"] = args.out_dir;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "wrote plot data to " << args.out_dir << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian copula mixture models: fitting, sampling, and evaluation"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a copula mixture to a CSV");
  add_common(fit_cmd, &fit_args.common);
  add_fit_options(fit_cmd, &fit_args, true);

  FitArgs gmm_args;
  CLI::App* gmm_cmd = app.add_subcommand("fit-gmm", "Fit the Gaussian mixture baseline");
  add_common(gmm_cmd, &gmm_args.common);
  add_fit_options(gmm_cmd, &gmm_args, false);

  SelectKArgs select_args;
  CLI::App* select_cmd = app.add_subcommand("select-k", "Pick the component count by AIC");
  add_common(select_cmd, &select_args.common);
  select_cmd->add_option("--data", select_args.data_path, "Training CSV")->required();
  select_cmd->add_option("--unsync-dir", select_args.unsync_dir,
                         "Directory of per-dimension CSVs with unpaired observations");
  select_cmd->add_option("--k-min", select_args.k_min, "Smallest K to try");
  select_cmd->add_option("--k-max", select_args.k_max, "Largest K to try");
  select_cmd->add_option("--tol", select_args.tol, "Relative log-likelihood stopping tolerance");
  select_cmd->add_option("--max-iters", select_args.max_iters, "Iteration cap");
  select_cmd->add_flag("--gmm", select_args.gmm, "Rank Gaussian mixtures instead");
  select_cmd->add_option("--marginal-param-cost", select_args.marginal_param_cost,
                         "AIC parameters charged per copula-mixture marginal (default 0)");

  SampleArgs sample_args;
  CLI::App* sample_cmd = app.add_subcommand("sample", "Draw rows from a fitted model");
  add_common(sample_cmd, &sample_args.common);
  sample_cmd->add_option("--model", sample_args.model_path, "Model JSON")->required();
  sample_cmd->add_option("--n", sample_args.n, "Rows to draw")->required();
  sample_cmd->add_option("--out", sample_args.out_path, "Output CSV path")->required();

  KsArgs ks_args;
  CLI::App* ks_cmd = app.add_subcommand("ks", "Two-sample KS test between two CSVs");
  add_common(ks_cmd, &ks_args.common);
  ks_cmd->add_option("--a", ks_args.a_path, "First CSV")->required();
  ks_cmd->add_option("--b", ks_args.b_path, "Second CSV")->required();

  BenchmarkArgs bench_args;
  CLI::App* bench_cmd =
      app.add_subcommand("benchmark", "Simulation benchmark: GMM vs copula mixtures");
  add_common(bench_cmd, &bench_args.common);
  bench_cmd->add_option("--spec", bench_args.spec_path,
                        "Generator spec JSON (omit for the built-in default)");
  bench_cmd->add_option("--seeds", bench_args.seed_count, "Number of seeds to run");
  bench_cmd->add_option("--n", bench_args.options.n, "Rows generated per seed");
  bench_cmd->add_option("--holdout-n", bench_args.options.holdout_n, "Holdout rows per seed");
  bench_cmd->add_option("--resample-n", bench_args.options.resample_n,
                        "Rows drawn from each fitted model");
  bench_cmd->add_option("--keep-fraction", bench_args.options.keep_fraction,
                        "Fraction of rows kept synchronized");
  bench_cmd->add_option("--k-min", bench_args.options.k_min, "Smallest K to try");
  bench_cmd->add_option("--k-max", bench_args.options.k_max, "Largest K to try");
  bench_cmd->add_option("--fixed-k", bench_args.options.fixed_k,
                        "Pin K for every method (skips selection)");
  bench_cmd->add_option("--tol", bench_args.options.fit.tol,
                        "Relative log-likelihood stopping tolerance");
  bench_cmd->add_option("--max-iters", bench_args.options.fit.max_iters, "Iteration cap");
  bench_cmd->add_option("--marginal-param-cost", bench_args.options.marginal_param_cost,
                        "AIC parameters charged per copula-mixture marginal (default 0)");
  bench_cmd->add_option("--out", bench_args.out_path, "Write the JSON report here");

  ExportPlotsArgs plot_args;
  CLI::App* plot_cmd =
      app.add_subcommand("export-plots", "Histogram and QQ CSVs for a model against data");
  add_common(plot_cmd, &plot_args.common);
  plot_cmd->add_option("--model", plot_args.model_path, "Model JSON")->required();
  plot_cmd->add_option("--data", plot_args.data_path, "Data CSV")->required();
  plot_cmd->add_option("--out-dir", plot_args.out_dir, "Directory for the CSVs")->required();
  plot_cmd->add_option("--n", plot_args.n, "Resample size used for the comparison");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit_args);
    if (gmm_cmd->parsed()) return run_fit_gmm(gmm_args);
    if (select_cmd->parsed()) return run_select_k(select_args);
    if (sample_cmd->parsed()) return run_sample(sample_args);
    if (ks_cmd->parsed()) return run_ks(ks_args);
    if (bench_cmd->parsed()) return run_benchmark_cmd(bench_args);
    if (plot_cmd->parsed()) return run_export_plots(plot_args);
  } catch (const gcmm::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gcmm::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
