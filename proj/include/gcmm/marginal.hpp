#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace gcmm {

struct BandwidthRule {
  enum class Kind { silverman, fixed };
  Kind kind = Kind::silverman;
  double value = 0.0;

  static BandwidthRule silverman() { return {}; }
  static BandwidthRule fixed(double h) { return {Kind::fixed, h}; }
};

struct MarginalBuildOptions {
  // Clip bound for cdf output. Defaults to max(1e-6, 1 / (2 n_eff + 2))
  // where n_eff = (sum w)^2 / sum w^2 over the positive weights.
  std::optional<double> clip_epsilon;
  BandwidthRule bandwidth;
};

// Weighted empirical marginal distribution for one (component, dimension)
// pair. Stores the deduplicated knots with cumulative normalized weights.
// The cdf interpolates linearly between midpoint anchors at the knots and
// is clipped to [eps, 1 - eps]; the density is a Gaussian kernel mixture
// over the knots; the inverse cdf never leaves [min knot, max knot].
class MarginalEstimator {
 public:
  MarginalEstimator() = default;

  double cdf(double x) const;
  double pdf(double x) const;
  double log_pdf(double x) const;
  double inverse_cdf(double u) const;

  // normal_quantile(cdf(x)); finite for every finite x because the cdf is
  // clipped away from 0 and 1.
  double gaussianize(double x) const;

  void cdf_many(std::span<const double> xs, std::span<double> out) const;
  void log_pdf_many(std::span<const double> xs, std::span<double> out) const;
  void gaussianize_many(std::span<const double> xs, std::span<double> out) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& cum_weights() const { return cum_; }
  double bandwidth() const { return bandwidth_; }
  double clip_epsilon() const { return clip_epsilon_; }

  // Sum of the positive input weights before normalization. Diagnostic
  // only; not serialized and not used by any evaluation.
  double total_weight() const { return total_weight_; }

  std::size_t size() const { return knots_.size(); }
  bool empty() const { return knots_.empty(); }

  // Rebuilds an estimator from serialized tables. Evaluations of the
  // result are bit-identical to the estimator that produced the tables,
  // because all derived quantities are recomputed from the tables alone.
  static MarginalEstimator from_tables(std::vector<double> knots,
                                       std::vector<double> cum_weights,
                                       double bandwidth, double clip_epsilon);

 private:
  friend MarginalEstimator build_weighted_ecdf(std::span<const double>,
                                               std::span<const double>,
                                               const MarginalBuildOptions&);
  friend MarginalEstimator build_augmented_ecdf(std::span<const double>,
                                                std::span<const double>,
                                                std::span<const double>,
                                                std::span<const double>,
                                                const MarginalBuildOptions&);

  // Shared builder body: sorts and merges the (value, weight) pairs,
  // normalizes the cumulative weights, derives bandwidth and clip bound.
  static MarginalEstimator build_impl(std::vector<double> values, std::vector<double> weights,
                                      const MarginalBuildOptions& opts);

  // Derives anchors and log kernel weights from knots_/cum_. Both the
  // build path and from_tables end here, which is what makes serialization
  // round trips exact.
  void finalize();

  std::vector<double> knots_;
  std::vector<double> cum_;
  std::vector<double> anchors_;        // clipped midpoints, the cdf values at the knots
  std::vector<double> log_kernel_w_;   // log(normalized knot weight) - log h - log sqrt(2 pi)
  double bandwidth_ = 0.0;
  double clip_epsilon_ = 0.0;
  double total_weight_ = 0.0;
};

// Builds the estimator from values with per-value weights. Requires at
// least two pairs, finite values, nonnegative finite weights with positive
// total. Zero-weight values are dropped; exact ties merge their weights.
MarginalEstimator build_weighted_ecdf(std::span<const double> values,
                                      std::span<const double> weights,
                                      const MarginalBuildOptions& opts = {});

// Pools synchronized and unsynchronized (value, weight) pairs into one
// weighted estimator. With empty unsync spans this is bit-identical to
// build_weighted_ecdf on the sync pairs.
MarginalEstimator build_augmented_ecdf(std::span<const double> sync_values,
                                       std::span<const double> sync_weights,
                                       std::span<const double> unsync_values,
                                       std::span<const double> unsync_weights,
                                       const MarginalBuildOptions& opts = {});

}  // namespace gcmm
