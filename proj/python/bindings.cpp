#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcmm/data.hpp"
#include "gcmm/em.hpp"
#include "gcmm/errors.hpp"
#include "gcmm/eval.hpp"
#include "gcmm/experiment.hpp"
#include "gcmm/gmm.hpp"
#include "gcmm/model.hpp"
#include "gcmm/threads.hpp"

namespace py = pybind11;

namespace {

gcmm::SyncDataset dataset_from(const Eigen::MatrixXd& values) {
  gcmm::SyncDataset data;
  data.values = values;
  data.dimension_names.reserve(static_cast<std::size_t>(values.cols()));
  for (Eigen::Index i = 0; i < values.cols(); ++i) {
    data.dimension_names.push_back("x" + std::to_string(i + 1));
  }
  return data;
}

std::optional<gcmm::UnsyncDataset> pools_from(
    const std::optional<std::vector<std::vector<double>>>& unsync) {
  if (!unsync) return std::nullopt;
  gcmm::UnsyncDataset pools;
  pools.per_dimension = *unsync;
  return pools;
}

py::dict trace_dict(const gcmm::EmTrace& trace) {
  py::dict out;
  out["log_likelihoods"] = trace.log_likelihoods;
  out["converged"] = trace.converged;
  out["iterations"] = trace.iterations_run;
  return out;
}

gcmm::FitConfig make_config(int k, std::uint64_t seed, double tol, int max_iters,
                            double weight_floor, double ridge) {
  gcmm::FitConfig cfg;
  cfg.k = k;
  cfg.seed = seed;
  cfg.tol = tol;
  cfg.max_iters = max_iters;
  cfg.weight_floor = weight_floor;
  cfg.ridge = ridge;
  return cfg;
}

gcmm::ModelKind kind_from(const std::string& name) {
  if (name == "gmm") return gcmm::ModelKind::gmm;
  if (name == "gcmm") return gcmm::ModelKind::gcmm;
  throw gcmm::DataError("kind must be 'gmm' or 'gcmm'");
}

std::string schema_of(const std::string& model_json) {
  try {
    return nlohmann::json::parse(model_json).value("schema", "");
  } catch (const nlohmann::json::exception& e) {
    throw gcmm::DataError(std::string("invalid model JSON: ") + e.what());
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaussian copula mixture models";

  py::register_exception<gcmm::DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<gcmm::NumericError>(m, "NumericError", PyExc_RuntimeError);

  m.def("set_num_threads", &gcmm::set_num_threads, py::arg("n"));

  m.def(
      "fit",
      [](const Eigen::MatrixXd& data, int k, std::uint64_t seed, double tol, int max_iters,
         double weight_floor, double ridge,
         const std::optional<std::vector<std::vector<double>>>& unsync) {
        gcmm::FitConfig cfg = make_config(k, seed, tol, max_iters, weight_floor, ridge);
        auto pools = pools_from(unsync);
        cfg.use_unsync = pools.has_value();
        auto [model, trace] = gcmm::fit(dataset_from(data), pools, cfg);
        py::dict out = trace_dict(trace);
        out["model"] = gcmm::serialize_model(model);
        return out;
      },
      py::arg("data"), py::arg("k"), py::arg("seed") = 0, py::arg("tol") = 1e-6,
      py::arg("max_iters") = 500, py::arg("weight_floor") = 1e-6, py::arg("ridge") = 1e-6,
      py::arg("unsync") = py::none(),
      "Fit a copula mixture; returns a dict with the model JSON and the trace");

  m.def(
      "fit_gmm",
      [](const Eigen::MatrixXd& data, int k, std::uint64_t seed, double tol, int max_iters,
         double weight_floor, double ridge) {
        gcmm::FitConfig cfg = make_config(k, seed, tol, max_iters, weight_floor, ridge);
        auto [model, trace] = gcmm::fit_gmm(dataset_from(data), cfg);
        py::dict out = trace_dict(trace);
        out["model"] = gcmm::serialize_gmm(model);
        return out;
      },
      py::arg("data"), py::arg("k"), py::arg("seed") = 0, py::arg("tol") = 1e-6,
      py::arg("max_iters") = 500, py::arg("weight_floor") = 1e-6, py::arg("ridge") = 1e-6,
      "Fit the Gaussian mixture baseline; returns a dict with the model JSON and the trace");

  m.def(
      "sample",
      [](const std::string& model_json, Eigen::Index n, std::uint64_t seed) -> Eigen::MatrixXd {
        gcmm::Rng rng(seed);
        if (schema_of(model_json) == "gmm-v1") {
          return gcmm::sample_gmm_dataset(gcmm::deserialize_gmm(model_json), n, rng).values;
        }
        return gcmm::sample_gcmm(gcmm::deserialize_model(model_json), n, rng).values;
      },
      py::arg("model"), py::arg("n"), py::arg("seed") = 0,
      "Draw n rows from a serialized model (copula mixture or GMM)");

  m.def(
      "log_density",
      [](const std::string& model_json, const Eigen::MatrixXd& points) -> Eigen::VectorXd {
        Eigen::VectorXd out(points.rows());
        if (schema_of(model_json) == "gmm-v1") {
          gcmm::GmmModel model = gcmm::deserialize_gmm(model_json);
          for (Eigen::Index i = 0; i < points.rows(); ++i) {
            out(i) = gcmm::gmm_log_density(model, points.row(i).transpose());
          }
        } else {
          gcmm::GcmmModel model = gcmm::deserialize_model(model_json);
          for (Eigen::Index i = 0; i < points.rows(); ++i) {
            out(i) = gcmm::gcmm_log_density(model, points.row(i).transpose());
          }
        }
        return out;
      },
      py::arg("model"), py::arg("points"),
      "Mixture log density at each row of points, for either serialized model kind");

  m.def(
      "ks_two_sample",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        gcmm::KsResult r = gcmm::ks_two_sample(a, b);
        py::dict out;
        out["statistic"] = r.statistic;
        out["p_value"] = r.p_value;
        out["n1"] = r.n1;
        out["n2"] = r.n2;
        return out;
      },
      py::arg("a"), py::arg("b"), "Two-sample Kolmogorov-Smirnov test");

  m.def(
      "aic",
      [](double log_likelihood, int k, int d, const std::string& kind,
         double marginal_param_cost) {
        gcmm::AicResult r = gcmm::aic(log_likelihood, k, d, kind_from(kind), marginal_param_cost);
        py::dict out;
        out["aic"] = r.aic;
        out["log_likelihood"] = r.log_likelihood;
        out["param_count"] = r.param_count;
        out["k"] = r.k;
        return out;
      },
      py::arg("log_likelihood"), py::arg("k"), py::arg("d"), py::arg("kind") = "gcmm",
      py::arg("marginal_param_cost") = 0.0);

  m.def(
      "select_k",
      [](const Eigen::MatrixXd& data, int k_min, int k_max, const std::string& kind,
         std::uint64_t seed, double tol, int max_iters, double marginal_param_cost,
         const std::optional<std::vector<std::vector<double>>>& unsync) {
        gcmm::FitConfig cfg;
        cfg.seed = seed;
        cfg.tol = tol;
        cfg.max_iters = max_iters;
        auto pools = pools_from(unsync);
        cfg.use_unsync = pools.has_value();
        gcmm::SelectKReport report = gcmm::select_k(dataset_from(data), pools, k_min, k_max, cfg,
                                                    kind_from(kind), marginal_param_cost);
        py::list rows;
        for (const auto& row : report.rows) {
          py::dict r;
          r["k"] = row.k;
          r["ok"] = row.ok;
          if (row.ok) {
            r["aic"] = row.result.aic;
            r["log_likelihood"] = row.result.log_likelihood;
            r["param_count"] = row.result.param_count;
            r["converged"] = row.converged;
            r["iterations"] = row.iterations;
          } else {
            r["error"] = row.error;
          }
          rows.append(std::move(r));
        }
        py::dict out;
        out["best_k"] = report.best_k;
        out["rows"] = std::move(rows);
        return out;
      },
      py::arg("data"), py::arg("k_min"), py::arg("k_max"), py::arg("kind") = "gcmm",
      py::arg("seed") = 0, py::arg("tol") = 1e-6, py::arg("max_iters") = 500,
      py::arg("marginal_param_cost") = 0.0, py::arg("unsync") = py::none(),
      "AIC table over a K range; returns the per-K rows and the winning K");

  m.def("default_benchmark_spec", [] { return gcmm::serialize_spec(gcmm::default_benchmark_spec()); });

  m.def(
      "make_ground_truth",
      [](const std::string& spec_json) {
        return gcmm::serialize_model(gcmm::make_ground_truth(gcmm::deserialize_spec(spec_json)));
      },
      py::arg("spec"), "Exact generator model for a benchmark spec, as model JSON");

  m.def(
      "run_benchmark",
      [](const std::optional<std::string>& spec_json, Eigen::Index n, Eigen::Index holdout_n,
         Eigen::Index resample_n, double keep_fraction, const std::vector<std::uint64_t>& seeds,
         int k_min, int k_max, int fixed_k, double tol, int max_iters,
         double marginal_param_cost) {
        gcmm::GeneratorSpec spec = spec_json ? gcmm::deserialize_spec(*spec_json)
                                             : gcmm::default_benchmark_spec();
        gcmm::BenchmarkOptions options;
        options.n = n;
        options.holdout_n = holdout_n;
        options.resample_n = resample_n;
        options.keep_fraction = keep_fraction;
        options.seeds = seeds;
        options.k_min = k_min;
        options.k_max = k_max;
        options.fixed_k = fixed_k;
        options.fit.tol = tol;
        options.fit.max_iters = max_iters;
        options.marginal_param_cost = marginal_param_cost;
        return gcmm::benchmark_report_json(gcmm::run_benchmark(spec, options));
      },
      py::arg("spec") = py::none(), py::arg("n") = 3000, py::arg("holdout_n") = 3000,
      py::arg("resample_n") = 3000, py::arg("keep_fraction") = 0.6,
      py::arg("seeds") = std::vector<std::uint64_t>{1, 2, 3}, py::arg("k_min") = 1,
      py::arg("k_max") = 6, py::arg("fixed_k") = 0, py::arg("tol") = 1e-6,
      py::arg("max_iters") = 500, py::arg("marginal_param_cost") = 0.0,
      "Run the simulation benchmark and return the JSON report");
}
