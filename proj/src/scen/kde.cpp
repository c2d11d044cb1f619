#include <cmath>

#include <json.hpp>

#include "ebcs/scen.hpp"

namespace ebcs::scen {

namespace {

double sample_std(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

double silverman_bandwidth(const Eigen::VectorXd& samples) {
  if (samples.size() < 2) throw Error(ErrorCode::Validation, "bandwidth needs at least 2 samples");
  const double sigma = sample_std(samples);
  if (sigma < 1e-12) throw Error(ErrorCode::Degenerate, "constant samples have no bandwidth; freeze the dimension");
  return 1.06 * sigma * std::pow(static_cast<double>(samples.size()), -0.2);
}

KdeModel fit_kde(const Eigen::MatrixXd& history, double frozen_tol) {
  if (history.rows() == 0) throw Error(ErrorCode::EmptyHistory, "no history rows to infer from");
  KdeModel m;
  m.samples = history;
  m.bandwidth = Eigen::VectorXd::Zero(history.cols());
  m.frozen.assign(history.cols(), true);
  if (history.rows() < 2) return m;
  for (Eigen::Index j = 0; j < history.cols(); ++j) {
    if (sample_std(history.col(j)) < frozen_tol) continue;
    m.frozen[j] = false;
    m.bandwidth[j] = silverman_bandwidth(history.col(j));
  }
  return m;
}

double kde_pdf(const KdeModel& model, int dim, double x) {
  if (dim < 0 || dim >= model.dims()) throw Error(ErrorCode::DimensionMismatch, "no such KDE dimension");
  if (model.frozen[dim] || !(model.bandwidth[dim] > 0.0))
    throw Error(ErrorCode::FrozenDimension, "dimension " + std::to_string(dim) + " is frozen");
  const double w = model.bandwidth[dim];
  const double norm = 1.0 / std::sqrt(2.0 * M_PI);
  double sum = 0.0;
  for (Eigen::Index m = 0; m < model.samples.rows(); ++m) {
    const double u = (x - model.samples(m, dim)) / w;
    sum += norm * std::exp(-0.5 * u * u);
  }
  return sum / (model.size() * w);
}

namespace {

using Json = nlohmann::ordered_json;

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const Json& j) {
  const auto rows = j.size();
  const auto cols = rows ? j[0].size() : 0;
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw Error(ErrorCode::Parse, "ragged matrix");
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

}  // namespace

std::string ScenarioModel::to_json() const {
  Json j;
  j["format"] = kFormat;
  j["format_version"] = kFormatVersion;
  j["delta"] = delta;
  Json bw = Json::array(), frozen = Json::array();
  for (Eigen::Index k = 0; k < solar.bandwidth.size(); ++k) {
    bw.push_back(solar.bandwidth[k]);
    frozen.push_back(static_cast<bool>(solar.frozen[k]));
  }
  j["solar"] = {{"bandwidth", bw}, {"frozen", frozen}, {"samples", matrix_json(solar.samples)}};
  j["price_history"] = matrix_json(price_history);
  return j.dump(1);
}

ScenarioModel ScenarioModel::from_json(const std::string& text) {
  ScenarioModel m;
  try {
    const Json j = Json::parse(text);
    if (j.at("format").get<std::string>() != kFormat) throw Error(ErrorCode::Parse, "not a scenario model document");
    if (j.at("format_version").get<int>() != kFormatVersion)
      throw Error(ErrorCode::Parse, "unsupported scenario model format version");
    m.delta = j.at("delta").get<double>();
    const auto& s = j.at("solar");
    m.solar.samples = matrix_from(s.at("samples"));
    const auto& bw = s.at("bandwidth");
    m.solar.bandwidth.resize(bw.size());
    for (std::size_t k = 0; k < bw.size(); ++k) m.solar.bandwidth[k] = bw[k].get<double>();
    for (const auto& f : s.at("frozen")) m.solar.frozen.push_back(f.get<bool>());
    if (m.solar.bandwidth.size() != m.solar.samples.cols() || m.solar.frozen.size() != bw.size())
      throw Error(ErrorCode::Parse, "solar model arrays differ in width");
    m.price_history = matrix_from(j.at("price_history"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("scenario model: ") + e.what());
  }
  return m;
}

ScenarioModel infer_scenario_model(const Eigen::MatrixXd& solar_history, const Eigen::MatrixXd& price_history,
                                   double delta) {
  if (price_history.rows() == 0) throw Error(ErrorCode::EmptyHistory, "no price history");
  if (!(delta >= 0.0 && delta < 1.0)) throw Error(ErrorCode::Validation, "delta must lie in [0, 1)");
  return {fit_kde(solar_history), price_history, delta};
}

}  // namespace ebcs::scen
