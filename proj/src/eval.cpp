#include "gcmm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gcmm/em.hpp"
#include "gcmm/errors.hpp"
#include "gcmm/gmm.hpp"

namespace gcmm {

namespace {

// Upper tail of the Kolmogorov distribution. The series alternates with
// monotone terms, so truncating when a term drops below 1e-10 bounds the
// error by that term.
double kolmogorov_p(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  double p = 0.0;
  double sign = 1.0;
  for (long j = 1; j <= 1000000; ++j) {
    double term = 2.0 * std::exp(-2.0 * static_cast<double>(j) * static_cast<double>(j) *
                                 lambda * lambda);
    if (term < 1e-10) break;
    p += sign * term;
    sign = -sign;
  }
  return std::clamp(p, 0.0, 1.0);
}

double row_log_sum_exp(const Eigen::MatrixXd& lc, Eigen::Index row) {
  double peak = lc.row(row).maxCoeff();
  return peak + std::log((lc.row(row).array() - peak).exp().sum());
}

const char* kind_name(ModelKind kind) { return kind == ModelKind::gmm ? "gmm" : "gcmm"; }

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 8 || b.size() < 8) {
    throw DataError("KS test requires at least 8 values per sample");
  }
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  for (double v : sa) {
    if (!std::isfinite(v)) throw DataError("KS samples must be finite");
  }
  for (double v : sb) {
    if (!std::isfinite(v)) throw DataError("KS samples must be finite");
  }
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  const std::size_t n1 = sa.size();
  const std::size_t n2 = sb.size();
  std::size_t ia = 0;
  std::size_t ib = 0;
  double stat = 0.0;
  while (ia < n1 && ib < n2) {
    // Consume every value tied at the current threshold in both samples
    // before comparing the ECDFs, otherwise ties inflate the statistic.
    double t = std::min(sa[ia], sb[ib]);
    while (ia < n1 && sa[ia] <= t) ++ia;
    while (ib < n2 && sb[ib] <= t) ++ib;
    double diff = std::abs(static_cast<double>(ia) / static_cast<double>(n1) -
                           static_cast<double>(ib) / static_cast<double>(n2));
    stat = std::max(stat, diff);
  }

  KsResult out;
  out.statistic = stat;
  out.n1 = static_cast<Eigen::Index>(n1);
  out.n2 = static_cast<Eigen::Index>(n2);
  double ne = static_cast<double>(n1) * static_cast<double>(n2) /
              static_cast<double>(n1 + n2);
  double root = std::sqrt(ne);
  out.p_value = kolmogorov_p((root + 0.12 + 0.11 / root) * stat);
  return out;
}

AicResult aic(double log_likelihood, int k, int d, ModelKind kind, double marginal_param_cost) {
  if (k < 1 || d < 1) throw DataError("K and D must be at least 1");
  if (!(marginal_param_cost >= 0.0)) throw DataError("marginal_param_cost must be nonnegative");
  double kd = static_cast<double>(k);
  double dd = static_cast<double>(d);
  double count = kd - 1.0;
  if (kind == ModelKind::gmm) {
    count += kd * dd + kd * dd * (dd + 1.0) / 2.0;
  } else {
    count += kd * dd * (dd - 1.0) / 2.0 + marginal_param_cost * kd * dd;
  }
  AicResult out;
  out.aic = 2.0 * count - 2.0 * log_likelihood;
  out.log_likelihood = log_likelihood;
  out.param_count = count;
  out.k = k;
  return out;
}

double gcmm_data_log_likelihood(const GcmmModel& model, const SyncDataset& data) {
  return e_step(model, data).second;
}

double gmm_data_log_likelihood(const GmmModel& model, const SyncDataset& data) {
  Eigen::MatrixXd lc = gmm_component_log_densities(model, data.values);
  double total = 0.0;
  for (Eigen::Index i = 0; i < lc.rows(); ++i) total += row_log_sum_exp(lc, i);
  return total;
}

SelectKReport select_k(const SyncDataset& data, const std::optional<UnsyncDataset>& unsync,
                       int k_min, int k_max, const FitConfig& config, ModelKind kind,
                       double marginal_param_cost) {
  if (k_min < 1 || k_max < k_min) throw DataError("K range must satisfy 1 <= k_min <= k_max");
  data.validate();

  SelectKReport report;
  report.kind = kind;
  report.rows.reserve(static_cast<std::size_t>(k_max - k_min + 1));

  for (int kk = k_min; kk <= k_max; ++kk) {
    SelectKRow row;
    row.k = kk;
    FitConfig local = config;
    local.k = kk;
    local.seed = config.seed ^ static_cast<std::uint64_t>(kk);
    try {
      double ll = 0.0;
      EmTrace trace;
      if (kind == ModelKind::gmm) {
        auto [model, tr] = fit_gmm(data, local);
        trace = std::move(tr);
        ll = trace.log_likelihoods.empty() ? gmm_data_log_likelihood(model, data)
                                           : trace.log_likelihoods.back();
      } else {
        auto [model, tr] = fit(data, unsync, local);
        trace = std::move(tr);
        ll = trace.log_likelihoods.empty() ? gcmm_data_log_likelihood(model, data)
                                           : trace.log_likelihoods.back();
      }
      row.ok = true;
      row.result = aic(ll, kk, static_cast<int>(data.d()), kind, marginal_param_cost);
      row.converged = trace.converged;
      row.iterations = trace.iterations_run;
    } catch (const std::runtime_error& e) {
      row.ok = false;
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }

  bool found = false;
  double best = 0.0;
  for (const auto& row : report.rows) {
    if (!row.ok) continue;
    if (!found || row.result.aic < best) {
      found = true;
      best = row.result.aic;
      report.best_k = row.k;
    }
  }
  if (!found) throw NumericError("every K in the range failed to fit");
  return report;
}

std::string select_k_report_json(const SelectKReport& report) {
  nlohmann::ordered_json j;
  j["kind"] = kind_name(report.kind);
  j["best_k"] = report.best_k;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r;
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
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string select_k_report_text(const SelectKReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "model: %s\n", kind_name(report.kind));
  out += line;
  std::snprintf(line, sizeof(line), "  %3s  %16s  %16s  %8s  %6s  %s\n", "K", "AIC",
                "log-likelihood", "params", "iters", "converged");
  out += line;
  for (const auto& row : report.rows) {
    if (row.ok) {
      std::snprintf(line, sizeof(line), "%c %3d  %16.6f  %16.6f  %8g  %6d  %s\n",
                    row.k == report.best_k ? '*' : ' ', row.k, row.result.aic,
                    row.result.log_likelihood, row.result.param_count, row.iterations,
                    row.converged ? "yes" : "no");
    } else {
      std::snprintf(line, sizeof(line), "  %3d  failed: %s\n", row.k, row.error.c_str());
    }
    out += line;
  }
  return out;
}

double gcmm_log_density(const GcmmModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.d() || !x.allFinite()) {
    throw DataError("evaluation point must be finite with the model's dimension");
  }
  Eigen::MatrixXd lc = component_log_densities(model, x.transpose());
  return row_log_sum_exp(lc, 0);
}

SyncDataset sample_gcmm(const GcmmModel& model, Eigen::Index n, Rng& rng) {
  model.validate();
  if (n < 1) throw DataError("sample count must be positive");
  const int k = model.k();
  const int d = model.d();

  SyncDataset out;
  out.values.resize(n, d);
  for (Eigen::Index row = 0; row < n; ++row) {
    double u = rng.uniform01();
    int pick = k - 1;
    double acc = 0.0;
    for (int kk = 0; kk < k; ++kk) {
      acc += model.weights(kk);
      if (u <= acc) {
        pick = kk;
        break;
      }
    }
    Eigen::VectorXd latent =
        sample_copula(model.correlations[static_cast<std::size_t>(pick)], rng);
    const auto& marg = model.marginals[static_cast<std::size_t>(pick)];
    for (int i = 0; i < d; ++i) {
      out.values(row, i) = marg[static_cast<std::size_t>(i)].inverse_cdf(latent(i));
    }
  }
  out.dimension_names.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) out.dimension_names.push_back("x" + std::to_string(i + 1));
  return out;
}

Eigen::VectorXd sum_dimension(const SyncDataset& data) {
  return data.values.rowwise().sum();
}

}  // namespace gcmm
