#pragma once

#include <Eigen/Core>

#include <vector>

#include "gcmm/math.hpp"

namespace gcmm {

// k-means++ seeded Lloyd clustering over the rows of x with deterministic
// tie-breaking (lower component index wins). Outcomes with a cluster
// smaller than min_cluster_size are re-seeded up to 10 times before a
// NumericError is raised. Both mixture initializers share this routine so
// a common seed yields a common partition.
std::vector<int> kmeans_assignments(const Eigen::MatrixXd& x, int k,
                                    Eigen::Index min_cluster_size, Rng& rng);

}  // namespace gcmm
