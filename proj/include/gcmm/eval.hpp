#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcmm/config.hpp"
#include "gcmm/data.hpp"
#include "gcmm/math.hpp"
#include "gcmm/model.hpp"

namespace gcmm {

struct KsResult {
  double statistic = 0.0;  // sup |ECDF1 - ECDF2| over the pooled points
  double p_value = 1.0;    // asymptotic Kolmogorov tail
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;
};

// Exact sup-difference statistic via a single merge scan; p-value from the
// Kolmogorov series with the usual effective-sample-size correction.
// Requires both samples to hold at least 8 values.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

enum class ModelKind { gmm, gcmm };

struct AicResult {
  double aic = 0.0;
  double log_likelihood = 0.0;
  double param_count = 0.0;
  int k = 0;
};

// param_count(gmm)  = (K-1) + K*D + K*D*(D+1)/2
// param_count(gcmm) = (K-1) + K*D*(D-1)/2 + marginal_param_cost*K*D
// The nonparametric marginals count for zero by default so the criterion
// ranks dependence-structure complexity; marginal_param_cost lets callers
// charge each marginal a fixed cost instead.
AicResult aic(double log_likelihood, int k, int d, ModelKind kind,
              double marginal_param_cost = 0.0);

struct SelectKRow {
  int k = 0;
  bool ok = false;
  AicResult result;
  bool converged = false;
  int iterations = 0;
  std::string error;  // set when ok is false
};

struct SelectKReport {
  ModelKind kind = ModelKind::gcmm;
  std::vector<SelectKRow> rows;  // ascending K
  int best_k = 0;                // argmin AIC, ties to the smaller K
};

// Fits every K in [k_min, k_max] with an independent RNG stream derived
// from config.seed and K. A failed fit is recorded on its row and skipped;
// only the case where every K fails is an error.
SelectKReport select_k(const SyncDataset& data, const std::optional<UnsyncDataset>& unsync,
                       int k_min, int k_max, const FitConfig& config, ModelKind kind,
                       double marginal_param_cost = 0.0);

std::string select_k_report_json(const SelectKReport& report);
std::string select_k_report_text(const SelectKReport& report);

// Mixture log density at one point, through the same component-density
// routine the E-step uses.
double gcmm_log_density(const GcmmModel& model, const Eigen::VectorXd& x);

// Ancestral sampling: component from the categorical weights, latent
// uniforms from the component copula, values through the marginal inverse
// cdfs. Dimension names are "x1".."xD".
SyncDataset sample_gcmm(const GcmmModel& model, Eigen::Index n, Rng& rng);

// Per-row sum across dimensions.
Eigen::VectorXd sum_dimension(const SyncDataset& data);

// Total log-likelihood of the dataset under the mixture; shared by
// select_k and the benchmark so reports can never disagree with the fits.
double gcmm_data_log_likelihood(const GcmmModel& model, const SyncDataset& data);
double gmm_data_log_likelihood(const GmmModel& model, const SyncDataset& data);

}  // namespace gcmm
