#include "gcmm/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gcmm/errors.hpp"

namespace gcmm {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_simplex(const Eigen::VectorXd& weights, double weight_floor) {
  if (weights.size() < 1) throw DataError("model must have at least one component");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights(i)) || weights(i) <= 0.0) {
      throw DataError("weights must be positive");
    }
    if (weights(i) < weight_floor) {
      throw DataError("weight below the configured floor");
    }
    sum += weights(i);
  }
  if (std::abs(sum - 1.0) > 1e-12) throw DataError("weights must sum to 1");
}

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw DataError(std::string(what) + " must be a matrix");
  const auto rows = j.size();
  const auto cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw DataError(std::string(what) + " rows must have equal length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

std::vector<double> vector_from_json(const ordered_json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(v.get<double>());
  return out;
}

ordered_json parse_payload(std::string_view bytes) {
  ordered_json j = ordered_json::parse(bytes, nullptr, false);
  if (j.is_discarded()) throw DataError("model payload is not valid JSON");
  return j;
}

}  // namespace

void GcmmModel::validate(double weight_floor) const {
  check_simplex(weights, weight_floor);
  const std::size_t kk = static_cast<std::size_t>(k());
  if (correlations.size() != kk) {
    throw DataError("correlation count must match the weight count");
  }
  const int dd = correlations.front().dim();
  for (const auto& c : correlations) {
    if (c.dim() != dd) throw DataError("correlation matrices must share one dimension");
  }
  if (marginals.size() != kk) throw DataError("marginal grid must have K rows");
  for (const auto& row : marginals) {
    if (row.size() != static_cast<std::size_t>(dd)) {
      throw DataError("marginal grid must have D columns");
    }
    for (const auto& m : row) {
      if (m.empty()) throw DataError("marginal grid must be fully populated");
    }
  }
}

void GmmModel::validate(double weight_floor) const {
  check_simplex(weights, weight_floor);
  const std::size_t kk = static_cast<std::size_t>(k());
  if (means.size() != kk || covariances.size() != kk) {
    throw DataError("means and covariances must match the weight count");
  }
  const auto dd = means.front().size();
  for (const auto& m : means) {
    if (m.size() != dd || !m.allFinite()) throw DataError("means must be finite, equal length");
  }
  for (const auto& c : covariances) {
    if (c.rows() != dd || c.cols() != dd || !c.allFinite()) {
      throw DataError("covariances must be finite D x D matrices");
    }
  }
  if (cov_cholesky.size() != kk || cov_log_det.size() != kk) {
    throw DataError("factorizations are stale; call refresh_factorizations");
  }
}

void GmmModel::refresh_factorizations() {
  cov_cholesky.clear();
  cov_log_det.clear();
  for (auto& c : covariances) {
    c = 0.5 * (c + c.transpose()).eval();
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) {
      throw NumericError("covariance matrix is not positive definite");
    }
    cov_cholesky.emplace_back(llt.matrixL());
    cov_log_det.push_back(2.0 * cov_cholesky.back().diagonal().array().log().sum());
  }
}

std::string serialize_model(const GcmmModel& model) {
  model.validate();
  ordered_json j;
  j["schema"] = "gcmm-v1";
  j["k"] = model.k();
  j["d"] = model.d();
  ordered_json weights = ordered_json::array();
  for (Eigen::Index i = 0; i < model.weights.size(); ++i) weights.push_back(model.weights(i));
  j["weights"] = std::move(weights);
  ordered_json correlations = ordered_json::array();
  for (const auto& c : model.correlations) correlations.push_back(matrix_to_json(c.matrix()));
  j["correlations"] = std::move(correlations);
  ordered_json marginals = ordered_json::array();
  for (const auto& row : model.marginals) {
    ordered_json jrow = ordered_json::array();
    for (const auto& m : row) {
      ordered_json jm;
      jm["knots"] = m.knots();
      jm["cum_weights"] = m.cum_weights();
      jm["bandwidth"] = m.bandwidth();
      jm["clip_epsilon"] = m.clip_epsilon();
      jrow.push_back(std::move(jm));
    }
    marginals.push_back(std::move(jrow));
  }
  j["marginals"] = std::move(marginals);
  return j.dump(2) + "\n";
}

GcmmModel deserialize_model(std::string_view bytes) {
  ordered_json j = parse_payload(bytes);
  if (!j.contains("schema") || j["schema"] != "gcmm-v1") {
    throw DataError("unsupported model schema; expected gcmm-v1");
  }
  GcmmModel model;
  auto weights = vector_from_json(j.at("weights"), "weights");
  model.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                    static_cast<Eigen::Index>(weights.size()));
  for (const auto& jc : j.at("correlations")) {
    model.correlations.push_back(CorrelationMatrix::from_matrix(matrix_from_json(jc, "correlation")));
  }
  for (const auto& jrow : j.at("marginals")) {
    std::vector<MarginalEstimator> row;
    for (const auto& jm : jrow) {
      row.push_back(MarginalEstimator::from_tables(
          vector_from_json(jm.at("knots"), "knots"),
          vector_from_json(jm.at("cum_weights"), "cum_weights"),
          jm.at("bandwidth").get<double>(), jm.at("clip_epsilon").get<double>()));
    }
    model.marginals.push_back(std::move(row));
  }
  if (j.contains("k") && j["k"].get<int>() != model.k()) {
    throw DataError("declared k does not match the weight count");
  }
  if (j.contains("d") && j["d"].get<int>() != model.d()) {
    throw DataError("declared d does not match the correlation dimension");
  }
  model.validate();
  return model;
}

std::string serialize_gmm(const GmmModel& model) {
  model.validate();
  ordered_json j;
  j["schema"] = "gmm-v1";
  j["k"] = model.k();
  j["d"] = model.d();
  ordered_json weights = ordered_json::array();
  for (Eigen::Index i = 0; i < model.weights.size(); ++i) weights.push_back(model.weights(i));
  j["weights"] = std::move(weights);
  ordered_json means = ordered_json::array();
  for (const auto& m : model.means) {
    ordered_json jm = ordered_json::array();
    for (Eigen::Index i = 0; i < m.size(); ++i) jm.push_back(m(i));
    means.push_back(std::move(jm));
  }
  j["means"] = std::move(means);
  ordered_json covs = ordered_json::array();
  for (const auto& c : model.covariances) covs.push_back(matrix_to_json(c));
  j["covariances"] = std::move(covs);
  return j.dump(2) + "\n";
}

GmmModel deserialize_gmm(std::string_view bytes) {
  ordered_json j = parse_payload(bytes);
  if (!j.contains("schema") || j["schema"] != "gmm-v1") {
    throw DataError("unsupported model schema; expected gmm-v1");
  }
  GmmModel model;
  auto weights = vector_from_json(j.at("weights"), "weights");
  model.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                    static_cast<Eigen::Index>(weights.size()));
  for (const auto& jm : j.at("means")) {
    auto v = vector_from_json(jm, "mean");
    model.means.push_back(
        Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  for (const auto& jc : j.at("covariances")) {
    model.covariances.push_back(matrix_from_json(jc, "covariance"));
  }
  model.refresh_factorizations();
  model.validate();
  return model;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
}

}  // namespace

void save_model(const GcmmModel& model, const std::string& path) {
  write_file(path, serialize_model(model));
}

GcmmModel load_model(const std::string& path) { return deserialize_model(read_file(path)); }

void save_gmm(const GmmModel& model, const std::string& path) {
  write_file(path, serialize_gmm(model));
}

GmmModel load_gmm(const std::string& path) { return deserialize_gmm(read_file(path)); }

}  // namespace gcmm
