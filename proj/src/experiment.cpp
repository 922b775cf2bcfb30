#include "gcmm/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "gcmm/em.hpp"
#include "gcmm/errors.hpp"
#include "gcmm/gmm.hpp"
#include "gcmm/threads.hpp"

namespace gcmm {

namespace {

constexpr char kSpecSchema[] = "gcmm-bench-spec-v1";
constexpr char kReportSchema[] = "gcmm-bench-report-v1";

const char* family_name(MarginalSpec::Family f) {
  switch (f) {
    case MarginalSpec::Family::gaussian: return "gaussian";
    case MarginalSpec::Family::lognormal: return "lognormal";
    case MarginalSpec::Family::student_t: return "student_t";
  }
  throw DataError("unknown marginal family");
}

MarginalSpec::Family family_from_name(const std::string& name) {
  if (name == "gaussian") return MarginalSpec::Family::gaussian;
  if (name == "lognormal") return MarginalSpec::Family::lognormal;
  if (name == "student_t") return MarginalSpec::Family::student_t;
  throw DataError("unknown marginal family: " + name);
}

nlohmann::ordered_json margin_to_json(const MarginalSpec& m) {
  nlohmann::ordered_json j;
  j["family"] = family_name(m.family);
  if (m.family == MarginalSpec::Family::student_t) {
    j["nu"] = m.nu;
    j["loc"] = m.loc;
    j["scale"] = m.scale;
  } else {
    j["mu"] = m.mu;
    j["sigma"] = m.sigma;
  }
  return j;
}

MarginalSpec margin_from_json(const nlohmann::json& j) {
  MarginalSpec m;
  m.family = family_from_name(j.at("family").get<std::string>());
  m.mu = j.value("mu", 0.0);
  m.sigma = j.value("sigma", 1.0);
  m.nu = j.value("nu", 5.0);
  m.loc = j.value("loc", 0.0);
  m.scale = j.value("scale", 1.0);
  m.validate();
  return m;
}

nlohmann::ordered_json spec_to_json(const GeneratorSpec& spec) {
  nlohmann::ordered_json j;
  j["schema"] = kSpecSchema;
  j["d"] = spec.d;
  j["weights"] = std::vector<double>(spec.weights.data(), spec.weights.data() + spec.weights.size());
  nlohmann::ordered_json comps = nlohmann::ordered_json::array();
  for (const auto& c : spec.components) {
    nlohmann::ordered_json cj;
    cj["rho"] = c.rho;
    nlohmann::ordered_json margins = nlohmann::ordered_json::array();
    for (const auto& m : c.margins) margins.push_back(margin_to_json(m));
    cj["margins"] = std::move(margins);
    comps.push_back(std::move(cj));
  }
  j["components"] = std::move(comps);
  return j;
}

GeneratorSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", "") != kSpecSchema) {
    throw DataError("unsupported spec schema");
  }
  GeneratorSpec spec;
  spec.d = j.at("d").get<int>();
  auto w = j.at("weights").get<std::vector<double>>();
  spec.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  for (const auto& cj : j.at("components")) {
    ComponentSpec c;
    c.rho = cj.at("rho").get<double>();
    for (const auto& mj : cj.at("margins")) c.margins.push_back(margin_from_json(mj));
    spec.components.push_back(std::move(c));
  }
  spec.validate();
  return spec;
}

double quantile_of_sorted(const std::vector<double>& sorted, double p) {
  const auto n = sorted.size();
  double pos = p * static_cast<double>(n - 1);
  auto lo = static_cast<std::size_t>(pos);
  if (lo >= n - 1) return sorted.back();
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string safe_file_name(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '-' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

void write_hist_csv(const std::filesystem::path& path, const std::vector<double>& data_col,
                    const std::vector<double>& model_col) {
  constexpr int kBins = 50;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : data_col) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : model_col) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double width = (hi - lo) / static_cast<double>(kBins);
  std::vector<long> dc(kBins, 0);
  std::vector<long> mc(kBins, 0);
  auto bin_of = [&](double v) {
    if (!(width > 0.0)) return 0;
    auto b = static_cast<int>((v - lo) / width);
    return std::clamp(b, 0, kBins - 1);
  };
  for (double v : data_col) ++dc[static_cast<std::size_t>(bin_of(v))];
  for (double v : model_col) ++mc[static_cast<std::size_t>(bin_of(v))];

  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "bin_left,bin_right,data_count,model_count\n";
  for (int b = 0; b < kBins; ++b) {
    double left = lo + width * static_cast<double>(b);
    double right = b + 1 == kBins ? hi : lo + width * static_cast<double>(b + 1);
    out << format_double(left) << ',' << format_double(right) << ',' << dc[static_cast<std::size_t>(b)]
        << ',' << mc[static_cast<std::size_t>(b)] << '\n';
  }
}

void write_qq_csv(const std::filesystem::path& path, std::vector<double> data_col,
                  std::vector<double> model_col) {
  std::sort(data_col.begin(), data_col.end());
  std::sort(model_col.begin(), model_col.end());
  const auto q = static_cast<std::size_t>(
      std::min<std::size_t>(200, std::min(data_col.size(), model_col.size())));
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "p,empirical,model\n";
  for (std::size_t j = 0; j < q; ++j) {
    double p = (static_cast<double>(j) + 0.5) / static_cast<double>(q);
    out << format_double(p) << ',' << format_double(quantile_of_sorted(data_col, p)) << ','
        << format_double(quantile_of_sorted(model_col, p)) << '\n';
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void validate_options(const BenchmarkOptions& o) {
  if (o.n < 2) throw DataError("benchmark n must be at least 2");
  if (o.holdout_n < 8 || o.resample_n < 8) {
    throw DataError("holdout_n and resample_n must be at least 8");
  }
  if (o.seeds.empty()) throw DataError("at least one seed is required");
  if (o.fixed_k < 0) throw DataError("fixed_k must be nonnegative");
  if (o.fixed_k == 0 && !(o.k_min >= 1 && o.k_max >= o.k_min)) {
    throw DataError("K range must satisfy 1 <= k_min <= k_max");
  }
  if (!(o.marginal_param_cost >= 0.0)) throw DataError("marginal_param_cost must be nonnegative");
  FitConfig probe = o.fit;
  probe.k = 1;
  probe.validate();
}

}  // namespace

double MarginalSpec::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DataError("quantile level must lie in (0, 1)");
  switch (family) {
    case Family::gaussian:
      return mu + sigma * normal_quantile(u);
    case Family::lognormal:
      return std::exp(mu + sigma * normal_quantile(u));
    case Family::student_t: {
      boost::math::students_t_distribution<double> dist(nu);
      return loc + scale * boost::math::quantile(dist, u);
    }
  }
  throw DataError("unknown marginal family");
}

void MarginalSpec::validate() const {
  switch (family) {
    case Family::gaussian:
    case Family::lognormal:
      if (!std::isfinite(mu)) throw DataError("mu must be finite");
      if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DataError("sigma must be positive");
      return;
    case Family::student_t:
      if (!(nu > 0.0) || !std::isfinite(nu)) throw DataError("nu must be positive");
      if (!std::isfinite(loc)) throw DataError("loc must be finite");
      if (!(scale > 0.0) || !std::isfinite(scale)) throw DataError("scale must be positive");
      return;
  }
  throw DataError("unknown marginal family");
}

void GeneratorSpec::validate() const {
  if (d < 1) throw DataError("spec dimension must be at least 1");
  if (components.empty()) throw DataError("spec needs at least one component");
  if (weights.size() != static_cast<Eigen::Index>(components.size())) {
    throw DataError("weights must list one entry per component");
  }
  double total = 0.0;
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    if (!(weights(k) > 0.0) || !std::isfinite(weights(k))) {
      throw DataError("component weights must be positive");
    }
    total += weights(k);
  }
  if (std::abs(total - 1.0) > 1e-9) throw DataError("weights must sum to 1");
  for (const auto& c : components) {
    if (!std::isfinite(c.rho) || !(c.rho > -1.0 && c.rho < 1.0)) {
      throw DataError("rho must lie in (-1, 1)");
    }
    if (d > 1 && !(c.rho > -1.0 / static_cast<double>(d - 1))) {
      throw DataError("rho makes the equicorrelation matrix singular");
    }
    if (c.margins.size() != static_cast<std::size_t>(d)) {
      throw DataError("component margins must cover every dimension");
    }
    for (const auto& m : c.margins) m.validate();
  }
}

GeneratorSpec default_benchmark_spec() {
  GeneratorSpec spec;
  spec.d = 2;
  spec.weights = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  const double rhos[3] = {0.8, -0.5, 0.2};
  for (double rho : rhos) {
    ComponentSpec c;
    c.rho = rho;
    MarginalSpec m;
    m.family = MarginalSpec::Family::lognormal;
    m.mu = 0.0;
    m.sigma = 0.6;
    c.margins = {m, m};
    spec.components.push_back(std::move(c));
  }
  return spec;
}

std::string serialize_spec(const GeneratorSpec& spec) {
  spec.validate();
  return spec_to_json(spec).dump(2) + "\n";
}

GeneratorSpec deserialize_spec(std::string_view bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid spec JSON: ") + e.what());
  }
  try {
    return spec_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid spec JSON: ") + e.what());
  }
}

void save_spec(const GeneratorSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << serialize_spec(spec);
  if (!out) throw DataError("failed to write " + path);
}

GeneratorSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_spec(bytes);
}

GcmmModel make_ground_truth(const GeneratorSpec& spec) {
  spec.validate();
  constexpr int kKnots = 10000;
  GcmmModel model;
  model.weights = spec.weights;
  model.correlations.reserve(spec.components.size());
  model.marginals.reserve(spec.components.size());

  std::vector<double> knots(kKnots);
  std::vector<double> ones(kKnots, 1.0);
  for (const auto& c : spec.components) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(spec.d, spec.d, c.rho);
    r.diagonal().setOnes();
    model.correlations.push_back(CorrelationMatrix::from_matrix(std::move(r)));

    std::vector<MarginalEstimator> row;
    row.reserve(c.margins.size());
    for (const auto& m : c.margins) {
      for (int j = 0; j < kKnots; ++j) {
        knots[static_cast<std::size_t>(j)] =
            m.quantile((static_cast<double>(j) + 0.5) / static_cast<double>(kKnots));
      }
      row.push_back(build_weighted_ecdf(knots, ones, {}));
    }
    model.marginals.push_back(std::move(row));
  }
  model.validate();
  return model;
}

std::pair<SyncDataset, UnsyncDataset> desynchronize(const SyncDataset& data, double keep_fraction,
                                                    Rng& rng, std::span<const double> drop_rates) {
  data.validate();
  const auto n = data.n();
  const auto d = data.d();
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw DataError("keep_fraction must lie in (0, 1]");
  }
  if (!(keep_fraction * static_cast<double>(n) >= 2.0)) {
    throw DataError("keep_fraction leaves fewer than 2 synchronized rows");
  }
  if (!drop_rates.empty() && drop_rates.size() != static_cast<std::size_t>(d)) {
    throw DataError("drop_rates must list one rate per dimension");
  }
  for (double r : drop_rates) {
    if (!(r >= 0.0 && r < 1.0)) throw DataError("drop rates must lie in [0, 1)");
  }

  auto keep = static_cast<Eigen::Index>(std::ceil(keep_fraction * static_cast<double>(n)));
  keep = std::min(keep, n);

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    std::size_t j = rng.index(static_cast<std::size_t>(i) + 1);
    std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
  }
  std::vector<Eigen::Index> kept(perm.begin(), perm.begin() + keep);
  std::vector<Eigen::Index> dropped(perm.begin() + keep, perm.end());
  std::sort(kept.begin(), kept.end());
  std::sort(dropped.begin(), dropped.end());

  SyncDataset sync;
  sync.dimension_names = data.dimension_names;
  sync.values.resize(keep, d);
  for (Eigen::Index i = 0; i < keep; ++i) {
    sync.values.row(i) = data.values.row(kept[static_cast<std::size_t>(i)]);
  }

  UnsyncDataset pools;
  pools.per_dimension.resize(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    auto& pool = pools.per_dimension[static_cast<std::size_t>(i)];
    pool.reserve(dropped.size());
    const double rate = drop_rates.empty() ? 0.0 : drop_rates[static_cast<std::size_t>(i)];
    for (Eigen::Index r : dropped) {
      if (rate > 0.0 && rng.uniform01() < rate) continue;
      pool.push_back(data.values(r, i));
    }
  }
  return {std::move(sync), std::move(pools)};
}

namespace {

// Sub-stream numbers hung off each benchmark seed. Fit streams are XORed
// with the chosen K inside select_k, so the post-selection refit replays
// the selected fit exactly.
enum : std::uint64_t {
  kStreamGenerate = 0,
  kStreamDesync = 1,
  kStreamHoldout = 2,
  kStreamFitGmm = 3,
  kStreamFitGcmm = 4,
  kStreamFitUnsync = 5,
  kStreamSampleGmm = 6,
  kStreamSampleGcmm = 7,
  kStreamSampleUnsync = 8,
};

BenchmarkSeedRow run_one_seed(const GcmmModel& truth, const BenchmarkOptions& options,
                              std::uint64_t seed) {
  BenchmarkSeedRow row;
  row.seed = seed;
  try {
    Rng gen(mix_seed(seed, kStreamGenerate));
    SyncDataset full = sample_gcmm(truth, options.n, gen);

    Rng des(mix_seed(seed, kStreamDesync));
    auto [sync, pools] = desynchronize(full, options.keep_fraction, des, options.drop_rates);
    std::optional<UnsyncDataset> pools_opt(std::move(pools));

    Rng hold(mix_seed(seed, kStreamHoldout));
    SyncDataset holdout = sample_gcmm(truth, options.holdout_n, hold);
    Eigen::VectorXd holdout_sums = sum_dimension(holdout);
    std::span<const double> holdout_span(holdout_sums.data(),
                                         static_cast<std::size_t>(holdout_sums.size()));

    auto finish = [&](const SyncDataset& resample, int chosen, bool converged) {
      Eigen::VectorXd sums = sum_dimension(resample);
      KsResult ks =
          ks_two_sample({sums.data(), static_cast<std::size_t>(sums.size())}, holdout_span);
      BenchmarkMethodResult r;
      r.k = chosen;
      r.ks_statistic = ks.statistic;
      r.p_value = ks.p_value;
      r.converged = converged;
      return r;
    };

    {
      FitConfig cfg = options.fit;
      cfg.use_unsync = false;
      std::uint64_t base = mix_seed(seed, kStreamFitGmm);
      int chosen = options.fixed_k;
      if (chosen <= 0) {
        FitConfig sel = cfg;
        sel.seed = base;
        chosen = select_k(sync, std::nullopt, options.k_min, options.k_max, sel, ModelKind::gmm,
                          options.marginal_param_cost)
                     .best_k;
        cfg.seed = base ^ static_cast<std::uint64_t>(chosen);
      } else {
        cfg.seed = base;
      }
      cfg.k = chosen;
      auto [model, trace] = fit_gmm(sync, cfg);
      Rng rs(mix_seed(seed, kStreamSampleGmm));
      row.gmm = finish(sample_gmm_dataset(model, options.resample_n, rs), chosen, trace.converged);
    }

    auto run_gcmm = [&](bool use_unsync, std::uint64_t fit_stream, std::uint64_t sample_stream) {
      FitConfig cfg = options.fit;
      cfg.use_unsync = use_unsync;
      std::uint64_t base = mix_seed(seed, fit_stream);
      int chosen = options.fixed_k;
      if (chosen <= 0) {
        FitConfig sel = cfg;
        sel.seed = base;
        chosen = select_k(sync, pools_opt, options.k_min, options.k_max, sel, ModelKind::gcmm,
                          options.marginal_param_cost)
                     .best_k;
        cfg.seed = base ^ static_cast<std::uint64_t>(chosen);
      } else {
        cfg.seed = base;
      }
      cfg.k = chosen;
      auto [model, trace] = fit(sync, pools_opt, cfg);
      Rng rs(mix_seed(seed, sample_stream));
      return finish(sample_gcmm(model, options.resample_n, rs), chosen, trace.converged);
    };

    row.gcmm = run_gcmm(false, kStreamFitGcmm, kStreamSampleGcmm);
    row.gcmm_unsync = run_gcmm(true, kStreamFitUnsync, kStreamSampleUnsync);
    row.ok = true;
  } catch (const std::runtime_error& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

}  // namespace

BenchmarkReport run_benchmark(const GeneratorSpec& spec, const BenchmarkOptions& options) {
  spec.validate();
  validate_options(options);
  GcmmModel truth = make_ground_truth(spec);

  BenchmarkReport report;
  report.spec = spec;
  report.options = options;
  report.rows.resize(options.seeds.size());

  parallel_blocks(options.seeds.size(), 1, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t s = lo; s < hi; ++s) {
      report.rows[s] = run_one_seed(truth, options, options.seeds[s]);
    }
  });

  std::vector<double> pg;
  std::vector<double> pc;
  std::vector<double> pu;
  for (const auto& row : report.rows) {
    if (!row.ok) continue;
    pg.push_back(row.gmm.p_value);
    pc.push_back(row.gcmm.p_value);
    pu.push_back(row.gcmm_unsync.p_value);
  }
  report.median_p_gmm = median(std::move(pg));
  report.median_p_gcmm = median(std::move(pc));
  report.median_p_gcmm_unsync = median(std::move(pu));
  return report;
}

std::string benchmark_report_json(const BenchmarkReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = kReportSchema;
  j["spec"] = spec_to_json(report.spec);

  const auto& o = report.options;
  nlohmann::ordered_json oj;
  oj["n"] = o.n;
  oj["holdout_n"] = o.holdout_n;
  oj["resample_n"] = o.resample_n;
  oj["keep_fraction"] = o.keep_fraction;
  oj["drop_rates"] = o.drop_rates;
  oj["seeds"] = o.seeds;
  oj["k_min"] = o.k_min;
  oj["k_max"] = o.k_max;
  oj["fixed_k"] = o.fixed_k;
  oj["tol"] = o.fit.tol;
  oj["max_iters"] = o.fit.max_iters;
  oj["weight_floor"] = o.fit.weight_floor;
  oj["ridge"] = o.fit.ridge;
  oj["marginal_param_cost"] = o.marginal_param_cost;
  j["options"] = std::move(oj);

  auto method_json = [](const BenchmarkMethodResult& m) {
    nlohmann::ordered_json mj;
    mj["k"] = m.k;
    mj["ks_statistic"] = m.ks_statistic;
    mj["p_value"] = m.p_value;
    mj["converged"] = m.converged;
    return mj;
  };

  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json rj;
    rj["seed"] = row.seed;
    rj["ok"] = row.ok;
    if (row.ok) {
      nlohmann::ordered_json methods;
      methods["gmm"] = method_json(row.gmm);
      methods["gcmm"] = method_json(row.gcmm);
      methods["gcmm_unsync"] = method_json(row.gcmm_unsync);
      rj["methods"] = std::move(methods);
    } else {
      rj["error"] = row.error;
    }
    rows.push_back(std::move(rj));
  }
  j["seeds"] = std::move(rows);

  nlohmann::ordered_json medians;
  medians["gmm"] = report.median_p_gmm;
  medians["gcmm"] = report.median_p_gcmm;
  medians["gcmm_unsync"] = report.median_p_gcmm_unsync;
  j["median_p"] = std::move(medians);
  return j.dump(2) + "\n";
}

std::string benchmark_report_text(const BenchmarkReport& report) {
  std::string out;
  char line[512];
  std::snprintf(line, sizeof(line), "%12s  %6s %10s  %6s %10s  %8s %10s\n", "seed", "gmm K",
                "gmm p", "gcmm K", "gcmm p", "unsync K", "unsync p");
  out += line;
  for (const auto& row : report.rows) {
    if (row.ok) {
      std::snprintf(line, sizeof(line), "%12llu  %6d %10.6f  %6d %10.6f  %8d %10.6f\n",
                    static_cast<unsigned long long>(row.seed), row.gmm.k, row.gmm.p_value,
                    row.gcmm.k, row.gcmm.p_value, row.gcmm_unsync.k, row.gcmm_unsync.p_value);
    } else {
      std::snprintf(line, sizeof(line), "%12llu  failed: %s\n",
                    static_cast<unsigned long long>(row.seed), row.error.c_str());
    }
    out += line;
  }
  std::snprintf(line, sizeof(line), "%12s  %6s %10.6f  %6s %10.6f  %8s %10.6f\n", "median p", "",
                report.median_p_gmm, "", report.median_p_gcmm, "", report.median_p_gcmm_unsync);
  out += line;
  return out;
}

void export_plot_data(const GcmmModel& model, const SyncDataset& data, const std::string& out_dir,
                      Eigen::Index resample_n, Rng& rng) {
  model.validate();
  data.validate();
  if (model.d() != static_cast<int>(data.d())) {
    throw DataError("model and data dimensions differ");
  }
  if (resample_n < 2) throw DataError("resample_n must be at least 2");

  SyncDataset resample = sample_gcmm(model, resample_n, rng);
  std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + out_dir + ": " + ec.message());

  auto column = [](const SyncDataset& ds, Eigen::Index i) {
    return std::vector<double>(ds.values.col(i).data(),
                               ds.values.col(i).data() + ds.values.rows());
  };

  for (Eigen::Index i = 0; i < data.d(); ++i) {
    std::string name = data.dimension_names.empty()
                           ? "x" + std::to_string(i + 1)
                           : safe_file_name(data.dimension_names[static_cast<std::size_t>(i)]);
    write_hist_csv(dir / ("hist_" + name + ".csv"), column(data, i), column(resample, i));
    write_qq_csv(dir / ("qq_" + name + ".csv"), column(data, i), column(resample, i));
  }

  Eigen::VectorXd ds = sum_dimension(data);
  Eigen::VectorXd ms = sum_dimension(resample);
  std::vector<double> data_sum(ds.data(), ds.data() + ds.size());
  std::vector<double> model_sum(ms.data(), ms.data() + ms.size());
  write_hist_csv(dir / "hist_sum.csv", data_sum, model_sum);
  write_qq_csv(dir / "qq_sum.csv", data_sum, model_sum);
}

}  // namespace gcmm
