#include "gcmm/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "gcmm/clustering.hpp"
#include "gcmm/errors.hpp"
#include "gcmm/math.hpp"
#include "gcmm/threads.hpp"

namespace gcmm {

namespace {

Eigen::VectorXd floored_weights(const Eigen::VectorXd& raw, double floor) {
  Eigen::VectorXd w = raw.cwiseMax(floor);
  return w / w.sum();
}

Eigen::MatrixXd weighted_centered_scatter(const Eigen::MatrixXd& x, const Eigen::VectorXd& mu,
                                          const Eigen::VectorXd& w) {
  const auto n = x.rows();
  const auto d = x.cols();
  const std::size_t block = 1024;
  const std::size_t blocks = (static_cast<std::size_t>(n) + block - 1) / block;
  std::vector<Eigen::MatrixXd> partial(blocks);
  std::vector<double> wsum(blocks, 0.0);
  parallel_blocks(static_cast<std::size_t>(n), block,
                  [&](std::size_t b, std::size_t lo, std::size_t hi) {
                    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
                    double ws = 0.0;
                    Eigen::VectorXd c(d);
                    for (std::size_t i = lo; i < hi; ++i) {
                      const auto idx = static_cast<Eigen::Index>(i);
                      c = x.row(idx).transpose() - mu;
                      acc.noalias() += w(idx) * (c * c.transpose());
                      ws += w(idx);
                    }
                    partial[b] = std::move(acc);
                    wsum[b] = ws;
                  });
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
  double total = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    s += partial[b];
    total += wsum[b];
  }
  if (!(total > 0.0)) throw NumericError("component weight vanished in the covariance update");
  return s / total;
}

void add_ridge(Eigen::MatrixXd& s, double ridge) {
  s.diagonal().array() += ridge * s.trace() / static_cast<double>(s.rows());
}

// log|S| + tr(S^{-1} Scatter), the covariance part of the EM surrogate.
// Lower is better.
double covariance_objective(const Eigen::MatrixXd& lower, double log_det,
                            const Eigen::MatrixXd& scatter) {
  auto tri = lower.triangularView<Eigen::Lower>();
  Eigen::MatrixXd m1 = tri.solve(scatter);
  Eigen::MatrixXd m2 = tri.solve(m1.transpose());
  return log_det + m2.trace();
}

GmmModel m_step(const SyncDataset& data, const Eigen::MatrixXd& resp, const FitConfig& config,
                const GmmModel* previous) {
  const auto n = data.n();
  const auto d = data.d();
  const auto k = resp.cols();

  Eigen::VectorXd totals = resp.colwise().sum();
  GmmModel model;
  model.weights = floored_weights(totals / static_cast<double>(n), config.weight_floor);
  model.means.resize(static_cast<std::size_t>(k));
  model.covariances.resize(static_cast<std::size_t>(k));

  const double collapse_floor = config.weight_floor * static_cast<double>(n);
  for (Eigen::Index kk = 0; kk < k; ++kk) {
    if (totals(kk) < collapse_floor) {
      // Re-seed a collapsed component at the worst-explained point with a
      // broad covariance.
      Eigen::Index worst = 0;
      double worst_score = resp.row(0).maxCoeff();
      for (Eigen::Index i = 1; i < n; ++i) {
        double s = resp.row(i).maxCoeff();
        if (s < worst_score) {
          worst_score = s;
          worst = i;
        }
      }
      model.means[static_cast<std::size_t>(kk)] = data.values.row(worst).transpose();
      Eigen::VectorXd mu = data.values.colwise().mean().transpose();
      Eigen::MatrixXd cov =
          weighted_centered_scatter(data.values, mu, Eigen::VectorXd::Ones(n));
      add_ridge(cov, std::max(config.ridge, 1e-6));
      model.covariances[static_cast<std::size_t>(kk)] = std::move(cov);
      continue;
    }

    Eigen::VectorXd w = resp.col(kk);
    Eigen::VectorXd mu = (data.values.transpose() * w) / totals(kk);
    Eigen::MatrixXd cov = weighted_centered_scatter(data.values, mu, w);
    add_ridge(cov, config.ridge);
    model.means[static_cast<std::size_t>(kk)] = std::move(mu);
    model.covariances[static_cast<std::size_t>(kk)] = std::move(cov);
  }

  model.refresh_factorizations();

  if (previous != nullptr) {
    // The ridge perturbs the exact covariance maximizer, so guard each
    // component: keep the previous covariance when the fresh one scores
    // worse on the surrogate. This preserves the classical nondecreasing
    // likelihood guarantee.
    bool changed = false;
    for (Eigen::Index kk = 0; kk < k; ++kk) {
      if (totals(kk) < collapse_floor) continue;
      Eigen::VectorXd w = resp.col(kk);
      Eigen::MatrixXd scatter =
          weighted_centered_scatter(data.values, model.means[static_cast<std::size_t>(kk)], w);
      double fresh = covariance_objective(model.cov_cholesky[static_cast<std::size_t>(kk)],
                                          model.cov_log_det[static_cast<std::size_t>(kk)], scatter);
      double kept = covariance_objective(previous->cov_cholesky[static_cast<std::size_t>(kk)],
                                         previous->cov_log_det[static_cast<std::size_t>(kk)], scatter);
      if (fresh > kept) {
        model.covariances[static_cast<std::size_t>(kk)] =
            previous->covariances[static_cast<std::size_t>(kk)];
        changed = true;
      }
    }
    if (changed) model.refresh_factorizations();
  }

  model.validate();
  return model;
}

}  // namespace

Eigen::MatrixXd gmm_component_log_densities(const GmmModel& model, const Eigen::MatrixXd& points) {
  const auto n = points.rows();
  const auto d = points.cols();
  if (d != model.d()) throw DataError("point dimension does not match the model");
  const auto k = model.k();

  Eigen::MatrixXd lc(n, static_cast<Eigen::Index>(k));
  const double norm = -0.5 * static_cast<double>(d) * kLogTwoPi;
  for (int kk = 0; kk < k; ++kk) {
    const auto& mu = model.means[static_cast<std::size_t>(kk)];
    const auto& lower = model.cov_cholesky[static_cast<std::size_t>(kk)];
    Eigen::MatrixXd centered = points.rowwise() - mu.transpose();
    Eigen::MatrixXd v = lower.triangularView<Eigen::Lower>().solve(centered.transpose());
    const double head = std::log(model.weights(kk)) + norm -
                        0.5 * model.cov_log_det[static_cast<std::size_t>(kk)];
    lc.col(kk) = (head - 0.5 * v.colwise().squaredNorm().transpose().array()).matrix();
  }
  return lc;
}

std::pair<GmmModel, EmTrace> fit_gmm(const SyncDataset& data, const FitConfig& config) {
  config.validate();
  data.validate();
  const auto n = data.n();
  const auto d = data.d();
  const int k = config.k;
  if (n < static_cast<Eigen::Index>(k) * (d + 1)) {
    throw DataError("initialization requires N >= K*(D+1)");
  }

  Rng rng(config.seed);
  auto assign = kmeans_assignments(data.values, k, std::max<Eigen::Index>(2, d), rng);

  GmmModel model;
  {
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (int a : assign) ++counts[static_cast<std::size_t>(a)];
    Eigen::VectorXd raw(k);
    for (int c = 0; c < k; ++c) {
      raw(c) = static_cast<double>(counts[static_cast<std::size_t>(c)]) / static_cast<double>(n);
    }
    model.weights = floored_weights(raw, config.weight_floor);
    model.means.resize(static_cast<std::size_t>(k));
    model.covariances.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
      Eigen::MatrixXd members(counts[static_cast<std::size_t>(c)], d);
      Eigen::Index at = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (assign[static_cast<std::size_t>(i)] == c) members.row(at++) = data.values.row(i);
      }
      Eigen::VectorXd mu = members.colwise().mean().transpose();
      Eigen::MatrixXd cov = weighted_centered_scatter(members, mu, Eigen::VectorXd::Ones(at));
      add_ridge(cov, std::max(config.ridge, 1e-9));
      model.means[static_cast<std::size_t>(c)] = std::move(mu);
      model.covariances[static_cast<std::size_t>(c)] = std::move(cov);
    }
    model.refresh_factorizations();
    model.validate();
  }

  EmTrace trace;
  double prev_l = 0.0;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    Eigen::MatrixXd resp = gmm_component_log_densities(model, data.values);
    double loglik = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double peak = resp.row(i).maxCoeff();
      double lse = peak + std::log((resp.row(i).array() - peak).exp().sum());
      if (!std::isfinite(lse)) {
        Eigen::Index bad = 0;
        for (Eigen::Index c = 0; c < resp.cols(); ++c) {
          if (!std::isfinite(resp(i, c))) {
            bad = c;
            break;
          }
        }
        throw NumericError("iteration " + std::to_string(iter) +
                           ": non-finite likelihood for observation " + std::to_string(i) +
                           ", component " + std::to_string(bad));
      }
      resp.row(i) = (resp.row(i).array() - lse).exp().matrix();
      resp.row(i) /= resp.row(i).sum();
      loglik += lse;
    }
    trace.log_likelihoods.push_back(loglik);
    if (iter >= 2) {
      double change = std::abs(loglik - prev_l) / (1.0 + std::abs(loglik));
      trace.final_change = change;
      if (change < config.tol) {
        trace.converged = true;
        break;
      }
    }
    prev_l = loglik;
    if (iter == config.max_iters) break;
    model = m_step(data, resp, config, &model);
  }

  trace.iterations_run = static_cast<int>(trace.log_likelihoods.size());
  return {std::move(model), std::move(trace)};
}

double gmm_log_density(const GmmModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.d() || !x.allFinite()) {
    throw DataError("evaluation point must be finite with the model's dimension");
  }
  Eigen::MatrixXd lc = gmm_component_log_densities(model, x.transpose());
  double peak = lc.row(0).maxCoeff();
  return peak + std::log((lc.row(0).array() - peak).exp().sum());
}

Eigen::VectorXd sample_gmm(const GmmModel& model, Rng& rng) {
  const int k = model.k();
  const int d = model.d();
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
  Eigen::VectorXd g(d);
  for (int i = 0; i < d; ++i) g(i) = rng.normal();
  return model.means[static_cast<std::size_t>(pick)] +
         model.cov_cholesky[static_cast<std::size_t>(pick)].triangularView<Eigen::Lower>() * g;
}

SyncDataset sample_gmm_dataset(const GmmModel& model, Eigen::Index n, Rng& rng) {
  if (n < 1) throw DataError("sample count must be positive");
  SyncDataset out;
  out.values.resize(n, model.d());
  for (Eigen::Index i = 0; i < n; ++i) out.values.row(i) = sample_gmm(model, rng).transpose();
  out.dimension_names.reserve(static_cast<std::size_t>(model.d()));
  for (int i = 0; i < model.d(); ++i) out.dimension_names.push_back("x" + std::to_string(i + 1));
  return out;
}

}  // namespace gcmm
