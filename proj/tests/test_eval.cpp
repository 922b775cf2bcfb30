#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "gcmm/config.hpp"
#include "gcmm/data.hpp"
#include "gcmm/errors.hpp"
#include "gcmm/eval.hpp"
#include "gcmm/math.hpp"
#include "gcmm/model.hpp"

using namespace gcmm;

namespace {

// O(n^2) sup-difference oracle over every pooled threshold.
double ks_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  double stat = 0.0;
  auto ecdf = [](const std::vector<double>& s, double t) {
    std::size_t c = 0;
    for (double v : s) {
      if (v <= t) ++c;
    }
    return static_cast<double>(c) / static_cast<double>(s.size());
  };
  for (double t : a) stat = std::max(stat, std::abs(ecdf(a, t) - ecdf(b, t)));
  for (double t : b) stat = std::max(stat, std::abs(ecdf(a, t) - ecdf(b, t)));
  return stat;
}

GcmmModel separated_pair(double w1) {
  GcmmModel model;
  model.weights = Eigen::Vector2d(w1, 1.0 - w1);
  model.correlations = {CorrelationMatrix::from_matrix(Eigen::MatrixXd::Identity(1, 1)),
                        CorrelationMatrix::from_matrix(Eigen::MatrixXd::Identity(1, 1))};
  std::vector<double> near = {0.0, 0.0};
  std::vector<double> far = {100.0, 100.0};
  std::vector<double> w = {1.0, 1.0};
  model.marginals = {{build_weighted_ecdf(near, w)}, {build_weighted_ecdf(far, w)}};
  model.validate();
  return model;
}

SyncDataset blob_pair(Eigen::Index n, uint64_t seed) {
  Rng rng(seed);
  SyncDataset data;
  data.dimension_names = {"x1", "x2"};
  data.values.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    double cx = i < n / 2 ? 0.0 : 7.0;
    data.values(i, 0) = cx + rng.normal();
    data.values(i, 1) = cx + rng.normal();
  }
  return data;
}

}  // namespace

TEST_CASE("ks statistic equals the brute-force oracle on random small samples") {
  Rng rng(101);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t n1 = 8 + rng.index(43);
    std::size_t n2 = 8 + rng.index(43);
    std::vector<double> a(n1), b(n2);
    // Coarse grids force ties within and across the samples.
    for (auto& v : a) v = std::floor(rng.uniform01() * 12.0) / 4.0;
    for (auto& v : b) v = std::floor(rng.uniform01() * 12.0) / 4.0 + 0.25;
    auto r = ks_two_sample(a, b);
    CHECK(r.statistic == ks_oracle(a, b));
    CHECK(r.p_value >= 0.0);
    CHECK(r.p_value <= 1.0);
  }
}

TEST_CASE("identical samples give statistic zero and p one") {
  std::vector<double> a = {3, 1, 4, 1, 5, 9, 2, 6};
  auto r = ks_two_sample(a, a);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);
  CHECK(r.n1 == 8);
  CHECK(r.n2 == 8);
}

TEST_CASE("disjoint supports give statistic one") {
  std::vector<double> a(10, 0.0), b(10, 1.0);
  for (std::size_t i = 0; i < 10; ++i) {
    a[i] = static_cast<double>(i) * 0.01;
    b[i] = 1.0 + static_cast<double>(i) * 0.01;
  }
  auto r = ks_two_sample(a, b);
  CHECK(r.statistic == 1.0);
  CHECK(r.p_value < 1e-4);
}

TEST_CASE("ks input validation") {
  std::vector<double> tiny = {1, 2, 3};
  std::vector<double> okay = {1, 2, 3, 4, 5, 6, 7, 8};
  CHECK_THROWS_WITH_AS(ks_two_sample(tiny, okay),
                       "KS test requires at least 8 values per sample", DataError);
  std::vector<double> bad = okay;
  bad[2] = std::nan("");
  CHECK_THROWS_WITH_AS(ks_two_sample(bad, okay), "KS samples must be finite", DataError);
}

TEST_CASE("asymptotic p-value matches the Kolmogorov series") {
  // Two shifted integer grids: statistic exactly one half at n1 = n2 = 16.
  std::vector<double> a(16), b(16);
  for (int i = 0; i < 16; ++i) {
    a[static_cast<std::size_t>(i)] = i;
    b[static_cast<std::size_t>(i)] = i + 8.0;
  }
  auto r = ks_two_sample(a, b);
  CHECK(r.statistic == 0.5);

  double ne = 16.0 * 16.0 / 32.0;
  double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * 0.5;
  double p = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 50; ++j) {
    p += sign * 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
    sign = -sign;
  }
  CHECK(r.p_value == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("parameter counts") {
  auto g = aic(-10.0, 1, 2, ModelKind::gmm);
  CHECK(g.param_count == 5.0);
  CHECK(g.aic == 2.0 * 5.0 + 20.0);
  CHECK(g.k == 1);
  CHECK(g.log_likelihood == -10.0);

  CHECK(aic(0.0, 3, 2, ModelKind::gcmm).param_count == 5.0);
  CHECK(aic(0.0, 1, 1, ModelKind::gcmm).param_count == 0.0);
  CHECK(aic(0.0, 2, 3, ModelKind::gmm).param_count == 1.0 + 6.0 + 12.0);
  // Optional per-marginal charge: (K-1) + K*D*(D-1)/2 + c*K*D.
  CHECK(aic(0.0, 2, 2, ModelKind::gcmm, 1.5).param_count == 1.0 + 2.0 + 6.0);

  // More parameters at equal likelihood can never win.
  CHECK(aic(-5.0, 2, 2, ModelKind::gcmm).aic < aic(-5.0, 3, 2, ModelKind::gcmm).aic);
}

TEST_CASE("singleton range selects its only k") {
  auto data = blob_pair(60, 3);
  FitConfig config;
  config.max_iters = 30;
  auto report = select_k(data, std::nullopt, 1, 1, config, ModelKind::gcmm);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].ok);
  CHECK(report.best_k == 1);
  CHECK(report.rows[0].result.k == 1);
}

TEST_CASE("infeasible k values are recorded, not fatal") {
  auto data = blob_pair(10, 9);
  FitConfig config;
  config.max_iters = 20;
  auto report = select_k(data, std::nullopt, 1, 4, config, ModelKind::gmm);
  REQUIRE(report.rows.size() == 4);
  CHECK_FALSE(report.rows[3].ok);  // K=4 needs 12 rows
  CHECK(report.rows[3].error.find("initialization requires") != std::string::npos);
  CHECK(report.best_k >= 1);

  auto text = select_k_report_text(report);
  CHECK(text.find("*") != std::string::npos);
  CHECK(text.find("failed") != std::string::npos);
  auto json = select_k_report_json(report);
  CHECK(json.find("\"best_k\"") != std::string::npos);
}

TEST_CASE("model selection is deterministic") {
  auto data = blob_pair(80, 21);
  FitConfig config;
  config.seed = 7;
  config.max_iters = 30;
  auto r1 = select_k(data, std::nullopt, 1, 3, config, ModelKind::gcmm);
  auto r2 = select_k(data, std::nullopt, 1, 3, config, ModelKind::gcmm);
  CHECK(select_k_report_json(r1) == select_k_report_json(r2));
}

TEST_CASE("sampler component frequencies track the weights") {
  auto model = separated_pair(0.3);
  Rng rng(55);
  auto sample = sample_gcmm(model, 100000, rng);
  double near = 0.0;
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    if (sample.values(i, 0) < 50.0) near += 1.0;
  }
  CHECK(std::abs(near / 100000.0 - 0.3) < 0.01);
}

TEST_CASE("samples stay inside the marginal support") {
  GcmmModel model;
  model.weights = Eigen::VectorXd::Ones(1);
  model.correlations = {CorrelationMatrix::from_matrix(Eigen::MatrixXd::Identity(1, 1))};
  std::vector<double> v = {0.0, 1.0};
  std::vector<double> w = {1.0, 1.0};
  model.marginals = {{build_weighted_ecdf(v, w)}};
  Rng rng(4);
  auto sample = sample_gcmm(model, 1000, rng);
  CHECK(sample.values.minCoeff() >= 0.0);
  CHECK(sample.values.maxCoeff() <= 1.0);
  CHECK(sample.dimension_names == std::vector<std::string>{"x1"});

  Rng r1(9), r2(9);
  auto s1 = sample_gcmm(model, 50, r1);
  auto s2 = sample_gcmm(model, 50, r2);
  CHECK((s1.values - s2.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("per-row sums") {
  SyncDataset data;
  data.dimension_names = {"a", "b"};
  data.values.resize(2, 2);
  data.values << 1, 2, 3, 4;
  Eigen::VectorXd s = sum_dimension(data);
  CHECK(s(0) == 3.0);
  CHECK(s(1) == 7.0);

  SyncDataset one;
  one.dimension_names = {"a"};
  one.values.resize(3, 1);
  one.values << 5, 6, 7;
  Eigen::VectorXd t = sum_dimension(one);
  for (int i = 0; i < 3; ++i) CHECK(t(i) == one.values(i, 0));

  Rng rng(31);
  SyncDataset wide;
  wide.dimension_names = {"a", "b", "c"};
  wide.values.resize(100, 3);
  for (Eigen::Index i = 0; i < 100; ++i) {
    for (int j = 0; j < 3; ++j) wide.values(i, j) = rng.normal();
  }
  Eigen::VectorXd u = sum_dimension(wide);
  for (Eigen::Index i = 0; i < 100; ++i) {
    double manual = wide.values(i, 0) + wide.values(i, 1) + wide.values(i, 2);
    CHECK(u(i) == manual);
  }
}

TEST_CASE("dataset likelihood equals the sum of point densities") {
  auto model = separated_pair(0.5);
  Rng rng(13);
  auto sample = sample_gcmm(model, 64, rng);
  double total = gcmm_data_log_likelihood(model, sample);
  double manual = 0.0;
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    manual += gcmm_log_density(model, sample.values.row(i).transpose());
  }
  CHECK(total == doctest::Approx(manual).epsilon(1e-12));
}
