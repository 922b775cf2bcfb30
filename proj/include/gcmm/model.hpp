#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <vector>

#include "gcmm/copula.hpp"
#include "gcmm/marginal.hpp"

namespace gcmm {

// Mixture of Gaussian copulas with nonparametric marginals: weights pi_k,
// correlation matrices P_k, and one MarginalEstimator per (component,
// dimension) pair.
struct GcmmModel {
  Eigen::VectorXd weights;
  std::vector<CorrelationMatrix> correlations;
  std::vector<std::vector<MarginalEstimator>> marginals;  // K x D

  int k() const { return static_cast<int>(weights.size()); }
  int d() const { return correlations.empty() ? 0 : correlations.front().dim(); }

  // Sizes consistent, weights a simplex within 1e-12 with every entry
  // above weight_floor, marginal grid fully populated. Correlation-form
  // SPD is a class invariant of CorrelationMatrix and needs no re-check.
  void validate(double weight_floor = 0.0) const;
};

// Gaussian mixture baseline.
struct GmmModel {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
  std::vector<Eigen::MatrixXd> cov_cholesky;  // lower factors, derived from covariances
  std::vector<double> cov_log_det;

  int k() const { return static_cast<int>(weights.size()); }
  int d() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }

  void validate(double weight_floor = 0.0) const;

  // Recomputes cov_cholesky and cov_log_det from covariances. Throws if a
  // covariance is not positive definite.
  void refresh_factorizations();
};

// JSON with schema tag "gcmm-v1". Round trip restores every stored number
// bit-exactly; see MarginalEstimator::from_tables and
// CorrelationMatrix::from_matrix for why evaluation also round-trips.
std::string serialize_model(const GcmmModel& model);
GcmmModel deserialize_model(std::string_view bytes);

// JSON with schema tag "gmm-v1".
std::string serialize_gmm(const GmmModel& model);
GmmModel deserialize_gmm(std::string_view bytes);

void save_model(const GcmmModel& model, const std::string& path);
GcmmModel load_model(const std::string& path);
void save_gmm(const GmmModel& model, const std::string& path);
GmmModel load_gmm(const std::string& path);

}  // namespace gcmm
