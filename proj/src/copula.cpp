#include "gcmm/copula.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "gcmm/errors.hpp"
#include "gcmm/threads.hpp"

namespace gcmm {

CorrelationMatrix CorrelationMatrix::from_matrix(Eigen::MatrixXd r) {
  const auto d = r.rows();
  if (d < 1 || r.cols() != d) {
    throw DataError("correlation matrix must be square and non-empty");
  }
  if (!r.allFinite()) {
    throw DataError("correlation matrix entries must be finite");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(r(i, i) - 1.0) > 1e-8) {
      throw DataError("correlation matrix diagonal must be 1");
    }
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(r(i, j) - r(j, i)) > 1e-8) {
        throw DataError("correlation matrix must be symmetric");
      }
    }
  }
  // Canonicalize: exact symmetry and exact unit diagonal. For input that
  // is already canonical this is a bitwise no-op, which keeps round trips
  // through serialization exact.
  CorrelationMatrix out;
  out.r_ = 0.5 * (r + r.transpose());
  out.r_.diagonal().setOnes();

  Eigen::LLT<Eigen::MatrixXd> llt(out.r_);
  if (llt.info() != Eigen::Success) {
    throw NumericError("correlation matrix is not positive definite");
  }
  out.l_ = llt.matrixL();
  out.log_det_ = 2.0 * out.l_.diagonal().array().log().sum();
  return out;
}

Eigen::MatrixXd weighted_scatter(const Eigen::MatrixXd& y, const Eigen::VectorXd& weights) {
  const auto n = y.rows();
  const auto d = y.cols();
  if (n < 1 || d < 1) throw DataError("scatter input must be non-empty");
  if (weights.size() != n) throw DataError("scatter weights must match the row count");

  // Fixed-size blocks with partials merged in block order keep the
  // accumulation bit-identical for any worker count.
  const std::size_t block = 1024;
  const std::size_t blocks = (static_cast<std::size_t>(n) + block - 1) / block;
  std::vector<Eigen::MatrixXd> partial(blocks);
  std::vector<double> wsum(blocks, 0.0);
  parallel_blocks(static_cast<std::size_t>(n), block,
                  [&](std::size_t b, std::size_t lo, std::size_t hi) {
                    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
                    double ws = 0.0;
                    for (std::size_t i = lo; i < hi; ++i) {
                      const auto idx = static_cast<Eigen::Index>(i);
                      double w = weights(idx);
                      acc.noalias() += w * (y.row(idx).transpose() * y.row(idx));
                      ws += w;
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
  if (!(total > 0.0)) throw DataError("scatter weights must have positive total");
  s /= total;
  return s;
}

CorrelationMatrix correlation_from_scatter(Eigen::MatrixXd s, double ridge) {
  const auto d = s.rows();
  if (d < 1 || s.cols() != d) throw DataError("scatter must be square");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw DataError("ridge must be finite and nonnegative");
  }
  s.diagonal().array() += ridge * s.trace() / static_cast<double>(d);

  Eigen::VectorXd diag = s.diagonal();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(diag(i) > 0.0) || !std::isfinite(diag(i))) {
      throw NumericError("scatter matrix is singular; a larger ridge may help");
    }
  }
  Eigen::VectorXd inv_sd = diag.array().rsqrt();
  Eigen::MatrixXd r = inv_sd.asDiagonal() * s * inv_sd.asDiagonal();
  r = 0.5 * (r + r.transpose()).eval();
  r.diagonal().setOnes();

  CorrelationMatrix out;
  out.r_ = std::move(r);
  Eigen::LLT<Eigen::MatrixXd> llt(out.r_);
  if (llt.info() != Eigen::Success) {
    throw NumericError("rescaled scatter is not positive definite; a larger ridge may help");
  }
  out.l_ = llt.matrixL();
  out.log_det_ = 2.0 * out.l_.diagonal().array().log().sum();
  return out;
}

CorrelationMatrix CorrelationMatrix::from_weighted_scatter(const Eigen::MatrixXd& y,
                                                           const Eigen::VectorXd& weights,
                                                           double ridge) {
  Eigen::Index positive = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) > 0.0) ++positive;
  }
  if (positive < y.cols()) {
    throw DataError("scatter needs at least D points with positive weight");
  }
  return correlation_from_scatter(weighted_scatter(y, weights), ridge);
}

double log_copula_density(const CorrelationMatrix& corr, const Eigen::VectorXd& y) {
  if (y.size() != corr.dim()) {
    throw DataError("point dimension does not match the correlation matrix");
  }
  Eigen::VectorXd v = corr.cholesky().triangularView<Eigen::Lower>().solve(y);
  return -0.5 * corr.log_det() - 0.5 * (v.squaredNorm() - y.squaredNorm());
}

Eigen::VectorXd sample_copula(const CorrelationMatrix& corr, Rng& rng) {
  const int d = corr.dim();
  Eigen::VectorXd g(d);
  for (int i = 0; i < d; ++i) g(i) = rng.normal();
  Eigen::VectorXd z = corr.cholesky().triangularView<Eigen::Lower>() * g;
  Eigen::VectorXd u(d);
  const double hi = std::nextafter(1.0, 0.0);
  for (int i = 0; i < d; ++i) {
    double p = normal_cdf(z(i));
    u(i) = std::min(std::max(p, std::numeric_limits<double>::min()), hi);
  }
  return u;
}

}  // namespace gcmm
