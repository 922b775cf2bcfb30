#include "gcmm/em.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>

#include "gcmm/clustering.hpp"
#include "gcmm/errors.hpp"
#include "gcmm/math.hpp"

namespace gcmm {

void FitConfig::validate() const {
  if (k < 1) throw DataError("K must be at least 1");
  if (max_iters < 0) throw DataError("max_iters must be nonnegative");
  if (!(tol > 0.0)) throw DataError("tol must be positive");
  if (!(weight_floor > 0.0 && weight_floor < 1.0 / static_cast<double>(k))) {
    throw DataError("weight_floor must lie in (0, 1/K)");
  }
  if (!(ridge >= 0.0)) throw DataError("ridge must be nonnegative");
  if (cdf_clip_epsilon && !(*cdf_clip_epsilon > 0.0 && *cdf_clip_epsilon < 0.5)) {
    throw DataError("cdf_clip_epsilon must lie in (0, 0.5)");
  }
  if (kde_bandwidth_rule.kind == BandwidthRule::Kind::fixed &&
      !(kde_bandwidth_rule.value > 0.0)) {
    throw DataError("fixed bandwidth must be positive");
  }
}

namespace {

MarginalBuildOptions options_from(const FitConfig& config) {
  MarginalBuildOptions opts;
  opts.clip_epsilon = config.cdf_clip_epsilon;
  opts.bandwidth = config.kde_bandwidth_rule;
  return opts;
}

std::span<const double> column_span(const Eigen::MatrixXd& m, Eigen::Index col) {
  return {m.col(col).data(), static_cast<std::size_t>(m.rows())};
}

Eigen::VectorXd floored_weights(const Eigen::VectorXd& raw, double floor) {
  Eigen::VectorXd w = raw.cwiseMax(floor);
  return w / w.sum();
}

// log|P| + tr(P^{-1} S): the per-component EM surrogate for the
// correlation update, up to a positive factor and sign. Lower is better.
double correlation_objective(const CorrelationMatrix& p, const Eigen::MatrixXd& s) {
  auto lower = p.cholesky().triangularView<Eigen::Lower>();
  Eigen::MatrixXd m1 = lower.solve(s);
  Eigen::MatrixXd m2 = lower.solve(m1.transpose());
  return p.log_det() + m2.trace();
}

CorrelationMatrix update_correlation(const Eigen::MatrixXd& y, const Eigen::VectorXd& w,
                                     const FitConfig& config, const CorrelationMatrix* prev) {
  Eigen::MatrixXd s = weighted_scatter(y, w);
  CorrelationMatrix cand = correlation_from_scatter(s, config.ridge);
  if (prev != nullptr) {
    // The unit-diagonal rescaling is not an exact maximizer of the EM
    // surrogate, so a candidate can occasionally be worse than the factor
    // it replaces. Keeping the incumbent in that case makes every
    // accepted update an ascent step.
    if (correlation_objective(cand, s) > correlation_objective(*prev, s)) {
      return *prev;
    }
  }
  return cand;
}

// Rebuilds a collapsed component from the points the current mixture
// explains worst, with an identity correlation.
void reset_component(GcmmModel& model, int k, const SyncDataset& data,
                     const Eigen::MatrixXd& resp, const FitConfig& config) {
  const auto n = data.n();
  const auto d = data.d();
  std::size_t count = static_cast<std::size_t>(
      std::ceil(config.weight_floor * static_cast<double>(n)));
  count = std::max<std::size_t>(count, static_cast<std::size_t>(d) + 2);
  count = std::min<std::size_t>(count, static_cast<std::size_t>(n));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd score(n);
  for (Eigen::Index i = 0; i < n; ++i) score(i) = resp.row(i).maxCoeff();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return score(a) < score(b); });

  Eigen::MatrixXd members(static_cast<Eigen::Index>(count), d);
  for (std::size_t j = 0; j < count; ++j) members.row(static_cast<Eigen::Index>(j)) = data.values.row(order[j]);

  std::vector<double> ones(count, 1.0);
  auto opts = options_from(config);
  for (Eigen::Index i = 0; i < d; ++i) {
    model.marginals[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] =
        build_weighted_ecdf(column_span(members, i), ones, opts);
  }
  model.correlations[static_cast<std::size_t>(k)] =
      CorrelationMatrix::from_matrix(Eigen::MatrixXd::Identity(d, d));
}

GcmmModel m_step_candidate(const SyncDataset& data, const Eigen::MatrixXd& resp,
                           const UnsyncDataset* unsync,
                           const std::vector<Eigen::MatrixXd>* unsync_resp,
                           const FitConfig& config, const GcmmModel* previous, bool freeze) {
  const auto n = data.n();
  const auto d = data.d();
  const auto k = resp.cols();
  if (resp.rows() != n || k < 1) throw DataError("responsibilities do not match the data");
  if (unsync != nullptr) {
    unsync->validate(d);
    if (unsync_resp == nullptr || unsync_resp->size() != static_cast<std::size_t>(d)) {
      throw DataError("unsynchronized responsibilities must cover every dimension");
    }
  }

  Eigen::VectorXd totals = resp.colwise().sum();
  GcmmModel model;
  model.weights = floored_weights(totals / static_cast<double>(n), config.weight_floor);
  model.correlations.resize(static_cast<std::size_t>(k));
  model.marginals.assign(static_cast<std::size_t>(k),
                         std::vector<MarginalEstimator>(static_cast<std::size_t>(d)));

  const auto opts = options_from(config);
  const double collapse_floor = config.weight_floor * static_cast<double>(n);
  Eigen::MatrixXd y(n, d);

  for (Eigen::Index kk = 0; kk < k; ++kk) {
    if (totals(kk) < collapse_floor) {
      reset_component(model, static_cast<int>(kk), data, resp, config);
      continue;
    }
    Eigen::VectorXd w = resp.col(kk);
    std::span<const double> w_span(w.data(), static_cast<std::size_t>(n));
    auto& row = model.marginals[static_cast<std::size_t>(kk)];
    for (Eigen::Index i = 0; i < d; ++i) {
      if ((freeze || config.freeze_marginals) && previous != nullptr) {
        row[static_cast<std::size_t>(i)] =
            previous->marginals[static_cast<std::size_t>(kk)][static_cast<std::size_t>(i)];
      } else if (unsync != nullptr) {
        const auto& pool = unsync->per_dimension[static_cast<std::size_t>(i)];
        const auto& uresp = (*unsync_resp)[static_cast<std::size_t>(i)];
        if (uresp.rows() != static_cast<Eigen::Index>(pool.size()) || uresp.cols() != k) {
          throw DataError("unsynchronized responsibilities do not match the pools");
        }
        std::span<const double> pool_w(uresp.col(kk).data(), pool.size());
        row[static_cast<std::size_t>(i)] =
            build_augmented_ecdf(column_span(data.values, i), w_span, pool, pool_w, opts);
      } else {
        row[static_cast<std::size_t>(i)] =
            build_weighted_ecdf(column_span(data.values, i), w_span, opts);
      }
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      row[static_cast<std::size_t>(i)].gaussianize_many(
          column_span(data.values, i), {y.col(i).data(), static_cast<std::size_t>(n)});
    }
    const CorrelationMatrix* prev_corr =
        previous != nullptr ? &previous->correlations[static_cast<std::size_t>(kk)] : nullptr;
    model.correlations[static_cast<std::size_t>(kk)] = update_correlation(y, w, config, prev_corr);
  }

  model.validate();
  return model;
}

// Sum over every pooled point of log(sum_k pi_k f_ki(x)): the marginal
// mixture likelihood whose E-step the unsynchronized responsibilities are.
// Empty pools contribute exactly zero.
double pooled_log_likelihood(const GcmmModel& model, const UnsyncDataset& unsync) {
  const auto d = model.d();
  const auto k = model.k();
  double total = 0.0;
  Eigen::ArrayXd tmp;
  Eigen::MatrixXd lc;
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& pool = unsync.per_dimension[static_cast<std::size_t>(i)];
    const auto rows = static_cast<Eigen::Index>(pool.size());
    if (rows == 0) continue;
    tmp.resize(rows);
    lc.resize(rows, k);
    for (int kk = 0; kk < k; ++kk) {
      model.marginals[static_cast<std::size_t>(kk)][static_cast<std::size_t>(i)].log_pdf_many(
          pool, {tmp.data(), pool.size()});
      lc.col(kk) = (std::log(model.weights(kk)) + tmp).matrix();
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      double peak = lc.row(r).maxCoeff();
      total += peak + std::log((lc.row(r).array() - peak).exp().sum());
    }
  }
  return total;
}

// The objective a guarded m-step must not lower: the synchronized
// log-likelihood plus, when pools are present, the pooled marginal term.
// A model the likelihood cannot be evaluated under yields nullopt.
std::optional<double> observed_objective(const GcmmModel& model, const SyncDataset& data,
                                         const UnsyncDataset* unsync,
                                         const double* sync_loglik) {
  double value = 0.0;
  if (sync_loglik != nullptr) {
    value = *sync_loglik;
  } else {
    try {
      value = e_step(model, data).second;
    } catch (const NumericError&) {
      return std::nullopt;
    }
  }
  if (unsync != nullptr) value += pooled_log_likelihood(model, *unsync);
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

GcmmModel m_step_impl(const SyncDataset& data, const Eigen::MatrixXd& resp,
                      const UnsyncDataset* unsync,
                      const std::vector<Eigen::MatrixXd>* unsync_resp,
                      const FitConfig& config, const GcmmModel* previous,
                      const double* previous_sync_loglik = nullptr) {
  GcmmModel cand =
      m_step_candidate(data, resp, unsync, unsync_resp, config, previous, /*freeze=*/false);
  if (previous == nullptr || config.freeze_marginals) return cand;

  // Rebuilding a marginal changes the density the likelihood is measured
  // against, so unlike the weight update the rebuild is not an ascent step
  // and left unchecked can walk the objective downhill for many iterations
  // in a row. Accept the rebuild only when it does not lower the observed
  // objective, fall back to a frozen-marginal step otherwise, and keep the
  // incumbent outright when even that fails numerically; every accepted
  // step is then nondecreasing. Tests exercise the pure update by passing
  // previous = nullptr.
  std::optional<double> before =
      observed_objective(*previous, data, unsync, previous_sync_loglik);
  if (!before.has_value()) return cand;
  std::optional<double> after = observed_objective(cand, data, unsync, nullptr);
  if (after.has_value() && *after >= *before) return cand;
  GcmmModel frozen =
      m_step_candidate(data, resp, unsync, unsync_resp, config, previous, /*freeze=*/true);
  std::optional<double> held = observed_objective(frozen, data, unsync, nullptr);
  if (held.has_value() && *held >= *before) return frozen;
  return *previous;
}

}  // namespace

GcmmModel initialize(const SyncDataset& data, const FitConfig& config, Rng& rng) {
  data.validate();
  config.validate();
  const auto n = data.n();
  const auto d = data.d();
  const int k = config.k;
  if (n < static_cast<Eigen::Index>(k) * (d + 1)) {
    throw DataError("initialization requires N >= K*(D+1)");
  }
  const auto min_size = std::max<Eigen::Index>(2, d);
  const auto opts = options_from(config);

  auto assign = kmeans_assignments(data.values, k, min_size, rng);
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
  for (int a : assign) ++counts[static_cast<std::size_t>(a)];

  GcmmModel model;
  Eigen::VectorXd raw(k);
  for (int c = 0; c < k; ++c) {
    raw(c) = static_cast<double>(counts[static_cast<std::size_t>(c)]) / static_cast<double>(n);
  }
  model.weights = floored_weights(raw, config.weight_floor);
  model.correlations.resize(static_cast<std::size_t>(k));
  model.marginals.assign(static_cast<std::size_t>(k),
                         std::vector<MarginalEstimator>(static_cast<std::size_t>(d)));

  for (int c = 0; c < k; ++c) {
    const auto rows = counts[static_cast<std::size_t>(c)];
    Eigen::MatrixXd members(rows, d);
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (assign[static_cast<std::size_t>(i)] == c) members.row(at++) = data.values.row(i);
    }
    std::vector<double> ones(static_cast<std::size_t>(rows), 1.0);
    Eigen::MatrixXd y(rows, d);
    auto& row = model.marginals[static_cast<std::size_t>(c)];
    for (Eigen::Index i = 0; i < d; ++i) {
      row[static_cast<std::size_t>(i)] = build_weighted_ecdf(column_span(members, i), ones, opts);
      row[static_cast<std::size_t>(i)].gaussianize_many(
          column_span(members, i), {y.col(i).data(), static_cast<std::size_t>(rows)});
    }
    model.correlations[static_cast<std::size_t>(c)] = CorrelationMatrix::from_weighted_scatter(
        y, Eigen::VectorXd::Ones(rows), config.ridge);
  }
  model.validate();
  return model;
}

Eigen::MatrixXd component_log_densities(const GcmmModel& model, const Eigen::MatrixXd& points) {
  const auto n = points.rows();
  const auto d = points.cols();
  if (d != model.d()) throw DataError("point dimension does not match the model");
  const auto k = model.k();

  Eigen::MatrixXd lc(n, k);
  Eigen::ArrayXd lz(n);
  Eigen::ArrayXd tmp(n);
  Eigen::MatrixXd y(n, d);
  for (int kk = 0; kk < k; ++kk) {
    lz.setZero();
    const auto& marg = model.marginals[static_cast<std::size_t>(kk)];
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto& est = marg[static_cast<std::size_t>(i)];
      std::span<const double> xs = column_span(points, i);
      est.log_pdf_many(xs, {tmp.data(), static_cast<std::size_t>(n)});
      lz += tmp;
      est.gaussianize_many(xs, {y.col(i).data(), static_cast<std::size_t>(n)});
    }
    const auto& corr = model.correlations[static_cast<std::size_t>(kk)];
    Eigen::MatrixXd v = corr.cholesky().triangularView<Eigen::Lower>().solve(y.transpose());
    Eigen::ArrayXd quad = v.colwise().squaredNorm().transpose().array() -
                          y.rowwise().squaredNorm().array();
    const double head = std::log(model.weights(kk)) - 0.5 * corr.log_det();
    lc.col(kk) = (head - 0.5 * quad + lz).matrix();
  }
  return lc;
}

std::pair<Eigen::MatrixXd, double> e_step(const GcmmModel& model, const SyncDataset& data) {
  model.validate();
  Eigen::MatrixXd lc = component_log_densities(model, data.values);
  const auto n = lc.rows();
  const auto k = lc.cols();
  double loglik = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double peak = lc.row(i).maxCoeff();
    double sum = (lc.row(i).array() - peak).exp().sum();
    double lse = peak + std::log(sum);
    if (!std::isfinite(lse)) {
      Eigen::Index bad = 0;
      for (Eigen::Index c = 0; c < k; ++c) {
        if (!std::isfinite(lc(i, c))) {
          bad = c;
          break;
        }
      }
      throw NumericError("non-finite likelihood for observation " + std::to_string(i) +
                         ", component " + std::to_string(bad));
    }
    lc.row(i) = (lc.row(i).array() - lse).exp().matrix();
    lc.row(i) /= lc.row(i).sum();
    loglik += lse;
  }
  return {std::move(lc), loglik};
}

GcmmModel m_step_base(const SyncDataset& data, const Eigen::MatrixXd& resp,
                      const FitConfig& config, const GcmmModel* previous) {
  return m_step_impl(data, resp, nullptr, nullptr, config, previous);
}

std::vector<Eigen::MatrixXd> e_step_unsync(const GcmmModel& model, const UnsyncDataset& unsync) {
  const auto d = model.d();
  const auto k = model.k();
  unsync.validate(d);

  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(d));
  Eigen::ArrayXd tmp;
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& pool = unsync.per_dimension[static_cast<std::size_t>(i)];
    const auto rows = static_cast<Eigen::Index>(pool.size());
    Eigen::MatrixXd lc(rows, k);
    if (rows == 0) {
      out[static_cast<std::size_t>(i)] = std::move(lc);
      continue;
    }
    tmp.resize(rows);
    for (int kk = 0; kk < k; ++kk) {
      model.marginals[static_cast<std::size_t>(kk)][static_cast<std::size_t>(i)].log_pdf_many(
          pool, {tmp.data(), pool.size()});
      lc.col(kk) = (std::log(model.weights(kk)) + tmp).matrix();
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      double peak = lc.row(r).maxCoeff();
      double lse = peak + std::log((lc.row(r).array() - peak).exp().sum());
      lc.row(r) = (lc.row(r).array() - lse).exp().matrix();
      lc.row(r) /= lc.row(r).sum();
    }
    out[static_cast<std::size_t>(i)] = std::move(lc);
  }
  return out;
}

GcmmModel m_step_unsync(const SyncDataset& data, const UnsyncDataset& unsync,
                        const Responsibilities& resp, const FitConfig& config,
                        const GcmmModel* previous) {
  return m_step_impl(data, resp.sync, &unsync, &resp.unsync, config, previous);
}

std::pair<GcmmModel, EmTrace> fit(const SyncDataset& data,
                                  const std::optional<UnsyncDataset>& unsync,
                                  const FitConfig& config) {
  config.validate();
  data.validate();
  const UnsyncDataset* pools = nullptr;
  if (config.use_unsync) {
    if (!unsync.has_value()) throw DataError("use_unsync requires an unsynchronized dataset");
    unsync->validate(data.d());
    pools = &unsync.value();
  }

  Rng rng(config.seed);
  GcmmModel model = initialize(data, config, rng);
  EmTrace trace;
  double prev_l = 0.0;

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    Eigen::MatrixXd resp;
    double l = 0.0;
    try {
      std::tie(resp, l) = e_step(model, data);
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(iter) + ": " + e.what());
    }
    trace.log_likelihoods.push_back(l);
    if (iter >= 2) {
      double change = std::abs(l - prev_l) / (1.0 + std::abs(l));
      trace.final_change = change;
      if (change < config.tol) {
        trace.converged = true;
        break;
      }
    }
    prev_l = l;
    if (iter == config.max_iters) break;

    try {
      if (pools != nullptr) {
        Responsibilities r;
        r.sync = std::move(resp);
        r.unsync = e_step_unsync(model, *pools);
        model = m_step_impl(data, r.sync, pools, &r.unsync, config, &model, &l);
      } else {
        model = m_step_impl(data, resp, nullptr, nullptr, config, &model, &l);
      }
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(iter) + ": " + e.what());
    }
  }

  trace.iterations_run = static_cast<int>(trace.log_likelihoods.size());
  return {std::move(model), std::move(trace)};
}

}  // namespace gcmm
