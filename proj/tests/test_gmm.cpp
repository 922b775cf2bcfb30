#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "gcmm/config.hpp"
#include "gcmm/data.hpp"
#include "gcmm/errors.hpp"
#include "gcmm/gmm.hpp"
#include "gcmm/math.hpp"
#include "gcmm/model.hpp"

using namespace gcmm;

namespace {

SyncDataset gaussian_cloud(Eigen::Index n, uint64_t seed, double mx, double my) {
  Rng rng(seed);
  SyncDataset data;
  data.dimension_names = {"x1", "x2"};
  data.values.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    double a = rng.normal();
    double b = rng.normal();
    data.values(i, 0) = mx + a;
    data.values(i, 1) = my + 0.4 * a + 0.8 * b;
  }
  return data;
}

SyncDataset two_gaussians(Eigen::Index n, uint64_t seed) {
  Rng rng(seed);
  SyncDataset data;
  data.dimension_names = {"x1", "x2"};
  data.values.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    double cx = i < n / 2 ? -4.0 : 4.0;
    data.values(i, 0) = cx + rng.normal();
    data.values(i, 1) = 0.5 * cx + rng.normal();
  }
  return data;
}

}  // namespace

TEST_CASE("single-component fit reaches the closed-form likelihood") {
  auto data = gaussian_cloud(400, 12, 1.0, -2.0);
  FitConfig config;
  config.k = 1;
  config.ridge = 0.0;
  config.tol = 1e-12;
  auto [model, trace] = fit_gmm(data, config);
  REQUIRE(trace.converged);

  const double n = static_cast<double>(data.n());
  Eigen::VectorXd mean = data.values.colwise().mean();
  Eigen::MatrixXd centered = data.values.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / n;
  double closed =
      -0.5 * n * (2.0 * kLogTwoPi + std::log(cov.determinant()) + 2.0);
  CHECK(std::abs(trace.log_likelihoods.back() - closed) < 1e-6);

  CHECK((model.means[0] - mean).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((model.covariances[0] - cov).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("single spherical component recovers its mean") {
  auto data = gaussian_cloud(2000, 77, 3.0, 3.0);
  FitConfig config;
  config.k = 1;
  auto [model, trace] = fit_gmm(data, config);
  CHECK(std::abs(model.means[0](0) - 3.0) < 4.0 / std::sqrt(2000.0));
}

TEST_CASE("log density at the mode of a standard normal") {
  GmmModel model;
  model.weights = Eigen::VectorXd::Ones(1);
  model.means = {Eigen::Vector2d::Zero()};
  model.covariances = {Eigen::MatrixXd::Identity(2, 2)};
  model.refresh_factorizations();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  CHECK(gmm_log_density(model, x) == doctest::Approx(-kLogTwoPi).epsilon(1e-14));
  CHECK(gmm_log_density(model, x) == doctest::Approx(-1.837877).epsilon(1e-6));
}

TEST_CASE("a mixture of identical components equals one component") {
  GmmModel one;
  one.weights = Eigen::VectorXd::Ones(1);
  one.means = {Eigen::Vector2d(0.7, -0.2)};
  Eigen::MatrixXd c(2, 2);
  c << 1.2, 0.3, 0.3, 0.9;
  one.covariances = {c};
  one.refresh_factorizations();

  GmmModel mix;
  mix.weights = Eigen::Vector2d(0.5, 0.5);
  mix.means = {one.means[0], one.means[0]};
  mix.covariances = {c, c};
  mix.refresh_factorizations();

  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd x(2);
    x << 3.0 * rng.normal(), 3.0 * rng.normal();
    CHECK(gmm_log_density(mix, x) == doctest::Approx(gmm_log_density(one, x)).epsilon(1e-14));
  }
}

TEST_CASE("mixture density matches a dense linear-algebra oracle") {
  GmmModel model;
  model.weights = Eigen::Vector2d(0.35, 0.65);
  model.means = {Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(2.5, -0.5)};
  Eigen::MatrixXd c1(2, 2), c2(2, 2);
  c1 << 1.0, 0.4, 0.4, 1.3;
  c2 << 0.6, -0.2, -0.2, 0.9;
  model.covariances = {c1, c2};
  model.refresh_factorizations();

  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x(2);
    x << 4.0 * rng.normal(), 4.0 * rng.normal();
    double mix = 0.0;
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd d = x - model.means[static_cast<std::size_t>(k)];
      const Eigen::MatrixXd& cov = model.covariances[static_cast<std::size_t>(k)];
      double quad = d.dot(cov.inverse() * d);
      mix += model.weights(k) *
             std::exp(-0.5 * (2.0 * kLogTwoPi + std::log(cov.determinant()) + quad));
    }
    CHECK(std::abs(gmm_log_density(model, x) - std::log(mix)) < 1e-10);
  }
}

TEST_CASE("gmm trace is nondecreasing") {
  auto data = two_gaussians(300, 41);
  FitConfig config;
  config.k = 2;
  config.seed = 2;
  config.tol = 1e-10;
  config.max_iters = 80;
  auto [model, trace] = fit_gmm(data, config);
  REQUIRE(trace.log_likelihoods.size() >= 2);
  for (std::size_t i = 1; i < trace.log_likelihoods.size(); ++i) {
    CHECK(trace.log_likelihoods[i] >= trace.log_likelihoods[i - 1] - 1e-8);
  }
}

TEST_CASE("gmm fit is deterministic for a fixed seed") {
  auto data = two_gaussians(200, 6);
  FitConfig config;
  config.k = 2;
  config.seed = 17;
  config.max_iters = 50;
  auto [m1, t1] = fit_gmm(data, config);
  auto [m2, t2] = fit_gmm(data, config);
  CHECK(t1.log_likelihoods == t2.log_likelihoods);
  CHECK(serialize_gmm(m1) == serialize_gmm(m2));
}

TEST_CASE("gmm sampling hits the component weights") {
  GmmModel model;
  model.weights = Eigen::Vector2d(0.3, 0.7);
  model.means = {Eigen::VectorXd::Constant(1, -10.0), Eigen::VectorXd::Constant(1, 10.0)};
  model.covariances = {Eigen::MatrixXd::Constant(1, 1, 0.25),
                       Eigen::MatrixXd::Constant(1, 1, 0.25)};
  model.refresh_factorizations();

  Rng rng(19);
  auto sample = sample_gmm_dataset(model, 100000, rng);
  double low = 0.0;
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    if (sample.values(i, 0) < 0.0) low += 1.0;
  }
  CHECK(std::abs(low / 100000.0 - 0.3) < 0.01);
  CHECK(sample.dimension_names == std::vector<std::string>{"x1"});

  Rng r2(19);
  auto again = sample_gmm_dataset(model, 100, r2);
  Rng r3(19);
  auto again2 = sample_gmm_dataset(model, 100, r3);
  CHECK((again.values - again2.values).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(sample_gmm_dataset(model, 0, rng), DataError);
}

TEST_CASE("gmm feasibility bound") {
  auto data = two_gaussians(4, 31);
  FitConfig config;
  config.k = 2;
  CHECK_THROWS_WITH_AS(fit_gmm(data, config), "initialization requires N >= K*(D+1)", DataError);
}
