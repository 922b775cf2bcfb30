#pragma once

#include <cstdint>
#include <optional>

#include "gcmm/marginal.hpp"

namespace gcmm {

// Shared fitting configuration for the GCMM engines and the GMM baseline.
struct FitConfig {
  int k = 1;
  int max_iters = 500;
  double tol = 1e-6;  // relative log-likelihood change
  uint64_t seed = 0;
  double weight_floor = 1e-6;  // must stay in (0, 1/K)
  double ridge = 1e-6;

  // Fixed cdf clip bound. Unset means the per-marginal default
  // max(1e-6, 1/(2 n_eff + 2)), which depends on the weights in play and
  // therefore cannot be a single number here.
  std::optional<double> cdf_clip_epsilon;

  BandwidthRule kde_bandwidth_rule;
  bool use_unsync = false;

  // Keeps every marginal at its initialization estimate; only weights and
  // correlations are re-estimated. In this mode the fit is a generalized
  // EM on (pi, P) and the likelihood trace is nondecreasing.
  bool freeze_marginals = false;

  void validate() const;
};

}  // namespace gcmm
