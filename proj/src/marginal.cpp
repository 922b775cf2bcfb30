#include "gcmm/marginal.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gcmm/errors.hpp"
#include "gcmm/math.hpp"
#include "gcmm/threads.hpp"

namespace gcmm {

namespace {

double weighted_step_quantile(const std::vector<double>& knots,
                              const std::vector<double>& cum, double p) {
  auto it = std::lower_bound(cum.begin(), cum.end(), p);
  if (it == cum.end()) return knots.back();
  return knots[static_cast<std::size_t>(it - cum.begin())];
}

struct PooledPairs {
  std::vector<double> values;
  std::vector<double> weights;

  void append(std::span<const double> v, std::span<const double> w, const char* label) {
    if (v.size() != w.size()) {
      throw DataError(std::string(label) + " values and weights must have the same length");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) {
        throw DataError(std::string(label) + " values must be finite");
      }
      if (!(w[i] >= 0.0) || !std::isfinite(w[i])) {
        throw DataError(std::string(label) + " weights must be finite and nonnegative");
      }
      if (w[i] > 0.0) {
        values.push_back(v[i]);
        weights.push_back(w[i]);
      }
    }
  }
};

}  // namespace

MarginalEstimator MarginalEstimator::build_impl(std::vector<double> values,
                                                std::vector<double> weights,
                                                const MarginalBuildOptions& opts) {
  const std::size_t n = values.size();
  if (n == 0) throw DataError("total weight must be positive");

  double total = 0.0;
  double sum_sq = 0.0;
  for (double w : weights) {
    total += w;
    sum_sq += w * w;
  }
  if (!(total > 0.0)) throw DataError("total weight must be positive");
  const double n_eff = total * total / sum_sq;

  // Stable sort on indices keeps tied weights accumulating in input order,
  // which pins the summation order bit for bit.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });

  MarginalEstimator est;
  est.knots_.reserve(n);
  std::vector<double> merged;
  merged.reserve(n);
  for (std::size_t idx : order) {
    double v = values[idx];
    double w = weights[idx];
    if (!est.knots_.empty() && est.knots_.back() == v) {
      merged.back() += w;
    } else {
      est.knots_.push_back(v);
      merged.push_back(w);
    }
  }

  // Normalize by the merge-order sum, not the input-order total: the two
  // can differ in the last bits, and dividing by the smaller one would let
  // an intermediate cumulative weight exceed 1, turning the final knot's
  // mass negative. With the merge-order norm the running quotient is
  // nondecreasing and the last entry is exactly norm / norm = 1.
  const std::size_t m = est.knots_.size();
  double norm = 0.0;
  for (double w : merged) norm += w;
  est.cum_.resize(m);
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    acc += merged[j];
    est.cum_[j] = acc / norm;
  }
  est.cum_[m - 1] = 1.0;
  est.total_weight_ = total;

  double eps;
  if (opts.clip_epsilon) {
    eps = *opts.clip_epsilon;
    if (!(eps > 0.0 && eps < 0.5)) {
      throw DataError("clip_epsilon must lie in (0, 0.5)");
    }
  } else {
    eps = std::max(1e-6, 1.0 / (2.0 * n_eff + 2.0));
  }
  est.clip_epsilon_ = eps;

  double h;
  if (opts.bandwidth.kind == BandwidthRule::Kind::fixed) {
    h = opts.bandwidth.value;
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw DataError("fixed bandwidth must be positive and finite");
    }
  } else {
    // Weighted Silverman rule with the effective sample size standing in
    // for the sample count.
    double mean = 0.0;
    for (std::size_t j = 0; j < m; ++j) mean += merged[j] * est.knots_[j];
    mean /= total;
    double var = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double d = est.knots_[j] - mean;
      var += merged[j] * d * d;
    }
    var /= total;
    double sd = std::sqrt(std::max(var, 0.0));
    double iqr = weighted_step_quantile(est.knots_, est.cum_, 0.75) -
                 weighted_step_quantile(est.knots_, est.cum_, 0.25);
    double scale = sd;
    if (iqr > 0.0) scale = std::min(scale, iqr / 1.34);
    if (!(scale > 0.0)) {
      // Degenerate spread (single knot or one dominant value). Fall back
      // to a scale tied to the magnitude of the data.
      scale = std::max(std::abs(mean), 1.0) * 1e-3;
    }
    h = 0.9 * scale * std::pow(n_eff, -0.2);
  }
  est.bandwidth_ = h;

  est.finalize();
  return est;
}

void MarginalEstimator::finalize() {
  const std::size_t m = knots_.size();
  anchors_.resize(m);
  log_kernel_w_.resize(m);
  const double log_h = std::log(bandwidth_);
  double prev = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double mid = 0.5 * (prev + cum_[j]);
    anchors_[j] = std::clamp(mid, clip_epsilon_, 1.0 - clip_epsilon_);
    // Knot masses are recovered as first differences of cum_ so that the
    // fresh-build and from_tables paths compute identical bits.
    double mass = cum_[j] - prev;
    log_kernel_w_[j] = std::log(mass) - log_h - kHalfLogTwoPi;
    prev = cum_[j];
  }
  // The cdf attains its clip bounds exactly at the extreme knots. This
  // makes [eps, 1 - eps] the exact range of the cdf over the knot span, so
  // the inverse cdf round-trips every u in that interval while never
  // leaving [min knot, max knot].
  if (m == 1) {
    anchors_[0] = 0.5;
  } else {
    anchors_[0] = clip_epsilon_;
    anchors_[m - 1] = 1.0 - clip_epsilon_;
  }
}

MarginalEstimator build_weighted_ecdf(std::span<const double> values,
                                      std::span<const double> weights,
                                      const MarginalBuildOptions& opts) {
  if (values.size() < 2) {
    throw DataError("build_weighted_ecdf requires at least two values");
  }
  PooledPairs pool;
  pool.append(values, weights, "marginal");
  return MarginalEstimator::build_impl(std::move(pool.values), std::move(pool.weights), opts);
}

MarginalEstimator build_augmented_ecdf(std::span<const double> sync_values,
                                       std::span<const double> sync_weights,
                                       std::span<const double> unsync_values,
                                       std::span<const double> unsync_weights,
                                       const MarginalBuildOptions& opts) {
  PooledPairs pool;
  pool.append(sync_values, sync_weights, "sync");
  pool.append(unsync_values, unsync_weights, "unsync");
  return MarginalEstimator::build_impl(std::move(pool.values), std::move(pool.weights), opts);
}

MarginalEstimator MarginalEstimator::from_tables(std::vector<double> knots,
                                                 std::vector<double> cum_weights,
                                                 double bandwidth, double clip_epsilon) {
  if (knots.empty() || knots.size() != cum_weights.size()) {
    throw DataError("marginal tables must be non-empty and equally sized");
  }
  double prev_knot = -std::numeric_limits<double>::infinity();
  double prev_cum = 0.0;
  for (std::size_t j = 0; j < knots.size(); ++j) {
    if (!std::isfinite(knots[j]) || knots[j] <= prev_knot) {
      throw DataError("marginal knots must be finite and strictly increasing");
    }
    if (!(cum_weights[j] >= prev_cum) || !(cum_weights[j] <= 1.0)) {
      throw DataError("marginal cumulative weights must be nondecreasing in (0, 1]");
    }
    prev_knot = knots[j];
    prev_cum = cum_weights[j];
  }
  if (std::abs(cum_weights.back() - 1.0) > 1e-12) {
    throw DataError("marginal cumulative weights must end at 1");
  }
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw DataError("marginal bandwidth must be positive and finite");
  }
  if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5)) {
    throw DataError("marginal clip_epsilon must lie in (0, 0.5)");
  }
  MarginalEstimator est;
  est.knots_ = std::move(knots);
  est.cum_ = std::move(cum_weights);
  est.bandwidth_ = bandwidth;
  est.clip_epsilon_ = clip_epsilon;
  est.total_weight_ = std::numeric_limits<double>::quiet_NaN();
  est.finalize();
  return est;
}

double MarginalEstimator::cdf(double x) const {
  const std::size_t m = knots_.size();
  if (x < knots_.front()) return clip_epsilon_;
  if (x > knots_.back()) return 1.0 - clip_epsilon_;
  // Exact knot hits return the anchor directly so that cdf and inverse_cdf
  // agree at the knots without interpolation roundoff.
  auto it = std::lower_bound(knots_.begin(), knots_.end(), x);
  std::size_t j = static_cast<std::size_t>(it - knots_.begin());
  if (j < m && knots_[j] == x) return anchors_[j];
  // Here knots_[j-1] < x < knots_[j].
  double x0 = knots_[j - 1];
  double x1 = knots_[j];
  double g0 = anchors_[j - 1];
  double g1 = anchors_[j];
  return g0 + (g1 - g0) * ((x - x0) / (x1 - x0));
}

double MarginalEstimator::inverse_cdf(double u) const {
  if (!(u > 0.0 && u < 1.0)) {
    throw DataError("inverse_cdf requires u in the open interval (0, 1)");
  }
  auto it = std::lower_bound(anchors_.begin(), anchors_.end(), u);
  if (it == anchors_.begin()) return knots_.front();
  if (it == anchors_.end()) return knots_.back();
  std::size_t j = static_cast<std::size_t>(it - anchors_.begin());
  // Here anchors_[j-1] < u <= anchors_[j], so the denominator is nonzero.
  double g0 = anchors_[j - 1];
  double g1 = anchors_[j];
  double x0 = knots_[j - 1];
  double x1 = knots_[j];
  double x = x0 + (x1 - x0) * ((u - g0) / (g1 - g0));
  // Clamping to the segment absorbs the one-ulp overshoot interpolation
  // can produce, keeping the inverse monotone across segment boundaries.
  return std::min(std::max(x, x0), x1);
}

double MarginalEstimator::log_pdf(double x) const {
  const auto m = static_cast<Eigen::Index>(knots_.size());
  Eigen::Map<const Eigen::ArrayXd> k(knots_.data(), m);
  Eigen::Map<const Eigen::ArrayXd> lw(log_kernel_w_.data(), m);
  const double inv_h = 1.0 / bandwidth_;
  // Two passes over every knot: find the dominant exponent first, then sum
  // all terms relative to it. Truncating by distance alone is wrong when
  // knot weights span many orders of magnitude.
  Eigen::ArrayXd s = lw - 0.5 * ((x - k) * inv_h).square();
  double peak = s.maxCoeff();
  double sum = (s - peak).exp().sum();
  return peak + std::log(sum);
}

double MarginalEstimator::pdf(double x) const { return std::exp(log_pdf(x)); }

double MarginalEstimator::gaussianize(double x) const {
  return normal_quantile(cdf(x));
}

void MarginalEstimator::cdf_many(std::span<const double> xs, std::span<double> out) const {
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = cdf(xs[i]);
}

void MarginalEstimator::log_pdf_many(std::span<const double> xs, std::span<double> out) const {
  const auto m = static_cast<Eigen::Index>(knots_.size());
  Eigen::Map<const Eigen::ArrayXd> k(knots_.data(), m);
  Eigen::Map<const Eigen::ArrayXd> lw(log_kernel_w_.data(), m);
  const double inv_h = 1.0 / bandwidth_;
  // Each output element is written by exactly one block, so the result is
  // independent of the worker count.
  parallel_blocks(xs.size(), 512, [&](std::size_t, std::size_t lo, std::size_t hi) {
    Eigen::ArrayXd s(m);
    for (std::size_t i = lo; i < hi; ++i) {
      s = lw - 0.5 * ((xs[i] - k) * inv_h).square();
      double peak = s.maxCoeff();
      out[i] = peak + std::log((s - peak).exp().sum());
    }
  });
}

void MarginalEstimator::gaussianize_many(std::span<const double> xs,
                                         std::span<double> out) const {
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = normal_quantile(cdf(xs[i]));
}

}  // namespace gcmm
