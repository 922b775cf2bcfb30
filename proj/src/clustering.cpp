#include "gcmm/clustering.hpp"

#include <algorithm>
#include <limits>

#include "gcmm/errors.hpp"

namespace gcmm {

namespace {

struct KmeansOutcome {
  std::vector<int> assign;
  bool ok = false;
};

KmeansOutcome run_once(const Eigen::MatrixXd& x, int k, Rng& rng) {
  const auto n = x.rows();
  const auto d = x.cols();

  // k-means++ seeding.
  Eigen::MatrixXd centers(k, d);
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = d2.sum();
    Eigen::Index pick;
    if (total > 0.0) {
      double target = rng.uniform01() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  KmeansOutcome out;
  out.assign.assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (x.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        double dd = (x.row(i) - centers.row(c)).squaredNorm();
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      auto& slot = out.assign[static_cast<std::size_t>(i)];
      if (slot != best) {
        slot = best;
        changed = true;
      }
    }
    if (!changed) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(out.assign[static_cast<std::size_t>(i)]) += x.row(i);
      counts(out.assign[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts(c) == 0.0) return out;  // dead center, caller re-seeds
      centers.row(c) = sums.row(c) / counts(c);
    }
  }
  out.ok = true;
  return out;
}

}  // namespace

std::vector<int> kmeans_assignments(const Eigen::MatrixXd& x, int k,
                                    Eigen::Index min_cluster_size, Rng& rng) {
  for (int attempt = 0; attempt < 10; ++attempt) {
    auto outcome = run_once(x, k, rng);
    if (!outcome.ok) continue;
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (int a : outcome.assign) ++counts[static_cast<std::size_t>(a)];
    if (*std::min_element(counts.begin(), counts.end()) >= min_cluster_size) {
      return outcome.assign;
    }
  }
  throw NumericError("k-means produced degenerate clusters 10 times in a row");
}

}  // namespace gcmm
