#pragma once

#include <Eigen/Core>

#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "gcmm/config.hpp"
#include "gcmm/data.hpp"
#include "gcmm/model.hpp"

namespace gcmm {

// Posterior component memberships. sync is N x K; unsync holds one
// n_i x K matrix per dimension for the unsynchronized pools.
struct Responsibilities {
  Eigen::MatrixXd sync;
  std::vector<Eigen::MatrixXd> unsync;
};

struct EmTrace {
  std::vector<double> log_likelihoods;  // one entry per E-step
  bool converged = false;
  int iterations_run = 0;
  double final_change = std::numeric_limits<double>::quiet_NaN();
};

// log pi_k plus the log density of component k at each point, N x K.
// This one routine backs the E-step, the likelihood trace, and the
// public density evaluation, so they can never disagree.
Eigen::MatrixXd component_log_densities(const GcmmModel& model, const Eigen::MatrixXd& points);

// k-means++ seeded k-means on the raw rows; per cluster: weight from the
// cluster fraction, marginals from the members' per-dimension ECDFs,
// correlation from the members' gaussianized coordinates.
GcmmModel initialize(const SyncDataset& data, const FitConfig& config, Rng& rng);

// Returns (responsibilities, log-likelihood). Rows sum to 1 within 1e-12.
std::pair<Eigen::MatrixXd, double> e_step(const GcmmModel& model, const SyncDataset& data);

// Weight, marginal, and correlation updates from synchronized
// responsibilities. Marginals are rebuilt first and the gaussianized
// coordinates are recomputed under them before the correlation update.
// When previous is supplied the step is a generalized EM update: a
// candidate correlation that would lower the EM surrogate is rejected in
// favor of the previous one, and a rebuilt model that would lower the
// observed log-likelihood is replaced by a frozen-marginal step, or by the
// previous model itself if even that step loses ground. Tests exercise the
// pure update by passing nullptr.
GcmmModel m_step_base(const SyncDataset& data, const Eigen::MatrixXd& resp,
                      const FitConfig& config, const GcmmModel* previous = nullptr);

// Bayes responsibilities of the unsynchronized points under the current
// (pre-update) marginals and weights.
std::vector<Eigen::MatrixXd> e_step_unsync(const GcmmModel& model, const UnsyncDataset& unsync);

// Like m_step_base, but every marginal pools the synchronized column with
// that dimension's unsynchronized observations, weighted by their own
// responsibilities. Weights and correlations still come from the
// synchronized responsibilities alone, and the guard's objective gains the
// pooled points' marginal mixture log-likelihood, so tail mass that only
// the pools support can still be accepted.
GcmmModel m_step_unsync(const SyncDataset& data, const UnsyncDataset& unsync,
                        const Responsibilities& resp, const FitConfig& config,
                        const GcmmModel* previous = nullptr);

// Full fit. The trace records the synchronized-data log-likelihood after
// every E-step; the returned model is the one the last trace entry was
// evaluated on. max_iters = 0 returns the initialized model with an empty
// trace.
std::pair<GcmmModel, EmTrace> fit(const SyncDataset& data,
                                  const std::optional<UnsyncDataset>& unsync,
                                  const FitConfig& config);

}  // namespace gcmm
