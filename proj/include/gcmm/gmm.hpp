#pragma once

#include <Eigen/Core>

#include <utility>

#include "gcmm/config.hpp"
#include "gcmm/data.hpp"
#include "gcmm/em.hpp"
#include "gcmm/model.hpp"

namespace gcmm {

// log pi_k plus the multivariate normal log density of component k at each
// point, N x K.
Eigen::MatrixXd gmm_component_log_densities(const GmmModel& model, const Eigen::MatrixXd& points);

// Classical mixture-of-Gaussians EM sharing the copula engine's
// initialization protocol, weight floor, ridge, and stopping rule.
std::pair<GmmModel, EmTrace> fit_gmm(const SyncDataset& data, const FitConfig& config);

double gmm_log_density(const GmmModel& model, const Eigen::VectorXd& x);

Eigen::VectorXd sample_gmm(const GmmModel& model, Rng& rng);

SyncDataset sample_gmm_dataset(const GmmModel& model, Eigen::Index n, Rng& rng);

}  // namespace gcmm
