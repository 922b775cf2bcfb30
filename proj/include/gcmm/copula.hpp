#pragma once

#include <Eigen/Dense>

#include "gcmm/math.hpp"

namespace gcmm {

// Correlation matrix together with its lower Cholesky factor and log
// determinant. The matrix entries are the canonical representation; the
// factor and the log determinant are always recomputed from them, so a
// matrix restored from serialized entries evaluates bit-identically to the
// one that was saved.
class CorrelationMatrix {
 public:
  CorrelationMatrix() = default;

  // Validates symmetry, unit diagonal, and positive definiteness.
  static CorrelationMatrix from_matrix(Eigen::MatrixXd r);

  // Weighted scatter of the rows of y, stabilized by a ridge proportional
  // to the mean diagonal, then rescaled to unit diagonal.
  static CorrelationMatrix from_weighted_scatter(const Eigen::MatrixXd& y,
                                                 const Eigen::VectorXd& weights,
                                                 double ridge);

  int dim() const { return static_cast<int>(r_.rows()); }
  const Eigen::MatrixXd& matrix() const { return r_; }
  const Eigen::MatrixXd& cholesky() const { return l_; }
  double log_det() const { return log_det_; }

 private:
  friend CorrelationMatrix correlation_from_scatter(Eigen::MatrixXd, double);

  Eigen::MatrixXd r_;
  Eigen::MatrixXd l_;
  double log_det_ = 0.0;
};

// Normalized weighted scatter sum_n w_n y_n y_n^T / sum_n w_n over the
// rows of y, accumulated in fixed block order (thread-count independent).
Eigen::MatrixXd weighted_scatter(const Eigen::MatrixXd& y, const Eigen::VectorXd& weights);

// Applies the ridge and the unit-diagonal rescaling to a scatter matrix.
CorrelationMatrix correlation_from_scatter(Eigen::MatrixXd s, double ridge);

// Log density of the Gaussian copula in gaussianized coordinates:
//   -0.5 log|R| - 0.5 y^T (R^{-1} - I) y
// For the identity matrix this is exactly zero.
double log_copula_density(const CorrelationMatrix& corr, const Eigen::VectorXd& y);

// One draw of correlated uniforms: z = L g with g standard normal, mapped
// through the normal cdf. Consumes exactly dim() normal draws.
Eigen::VectorXd sample_copula(const CorrelationMatrix& corr, Rng& rng);

}  // namespace gcmm
