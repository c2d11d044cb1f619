#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "ebcs/pce.hpp"

namespace ebcs::pce {

using Json = nlohmann::ordered_json;

namespace {

/// Highest usable degree per dimension: below the distinct-value count and with a regular moment system.
std::vector<UnivariateBasis> capped_bases(const Eigen::MatrixXd& z, const MomentTable& moments, std::vector<int>& caps) {
  std::vector<UnivariateBasis> bases(z.cols());
  caps.assign(z.cols(), 0);
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    std::vector<double> v(z.col(j).data(), z.col(j).data() + z.rows());
    std::sort(v.begin(), v.end());
    const auto distinct = static_cast<int>(std::unique(v.begin(), v.end()) - v.begin());
    const int limit = std::min(moments.order, distinct - 1);
    for (int d = 0; d <= limit; ++d) {
      try {
        bases[j].degrees.push_back(univariate_basis(moments.moments.col(j), d));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularMomentMatrix) throw;
        break;
      }
    }
    caps[j] = bases[j].order();
  }
  return bases;
}

}  // namespace

PceModel fit_pce(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& y, const FitOptions& options) {
  if (inputs.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "inputs and responses differ in length");
  if (inputs.rows() < 2) throw Error(ErrorCode::Validation, "fitting needs at least 2 training rows");
  Standardized st = standardize(inputs);
  const MomentTable moments = raw_moments(st.values, options.order);

  PceModel model;
  model.standardization = st.params;
  model.order = options.order;
  model.q = options.q;
  std::vector<int> caps;
  model.bases = capped_bases(st.values, moments, caps);
  const bool capped = std::any_of(caps.begin(), caps.end(), [&](int c) { return c < options.order; });

  const IndexSet set = build_index_set(st.params.active_count(), options.order, options.q, options.index_cap,
                                       capped ? caps : std::vector<int>{});
  const Design design(st.values, set, model.bases, options.dense_budget);
  const OmpResult fit = omp_fit(design, y, options.omp);

  for (std::size_t i = 0; i < fit.active.size(); ++i)
    model.terms.push_back({fit.active[i], set.term(fit.active[i]), fit.coefficients[i]});
  std::sort(model.terms.begin(), model.terms.end(), [](const auto& a, const auto& b) { return a.index < b.index; });

  auto& d = model.diagnostics;
  d.validation_r2 = fit.validation_r2;
  d.active_size = static_cast<int>(model.terms.size());
  d.iterations = fit.iterations;
  d.index_set_size = static_cast<std::int64_t>(set.size());
  d.training_rows = static_cast<int>(y.size());
  d.max_terms = options.omp.max_terms;
  d.stop_reason = fit.stop_reason;
  d.degenerate = fit.degenerate;
  d.residual_history = fit.residual_history;
  for (const auto& b : model.bases)
    for (const auto& p : b.degrees) d.max_condition_number = std::max(d.max_condition_number, p.condition_number);
  // Stored through the evaluation path so a reload reproduces it exactly.
  d.residual_norm = (y - surrogate_eval(model, inputs)).norm();
  d.relative_residual = y.norm() > 0.0 ? d.residual_norm / y.norm() : 0.0;
  return model;
}

Eigen::VectorXd surrogate_eval(const PceModel& model, const Eigen::MatrixXd& inputs) {
  const Eigen::MatrixXd z = model.standardization.apply(inputs);
  const Eigen::Index M = z.rows();
  std::vector<Eigen::MatrixXd> tables(z.cols());
  for (const auto& t : model.terms)
    for (const auto& [j, deg] : t.beta) {
      if (j < 0 || j >= z.cols() || deg > model.bases[j].order())
        throw Error(ErrorCode::DimensionMismatch, "model term references an unknown basis");
      if (tables[j].size() == 0) tables[j] = model.bases[j].table(z.col(j));
    }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(M);
  Eigen::ArrayXd psi(M);
  for (const auto& t : model.terms) {
    psi.setConstant(t.coefficient);
    for (const auto& [j, deg] : t.beta) psi *= tables[j].col(deg).array();
    out.array() += psi;
  }
  return out;
}

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(); }
double number_from(const Json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Eigen::VectorXd vector_from(const Json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

std::string PceModel::to_json() const {
  Json j;
  j["format"] = kFormat;
  j["format_version"] = kFormatVersion;
  j["order"] = order;
  j["q"] = q;
  j["input_dims"] = input_dims();
  const auto& s = standardization;
  Json frozen = Json::array();
  for (bool f : s.frozen) frozen.push_back(f);
  j["standardization"] = {{"mean", vector_json(s.mean)}, {"std", vector_json(s.std)}, {"frozen", frozen}};
  Json caps = Json::array();
  for (const auto& b : bases) caps.push_back(b.order());
  j["index_set"] = {
      {"dims", s.active_count()}, {"order", order}, {"q", q}, {"degree_caps", caps}, {"size", diagnostics.index_set_size}};
  Json bases_json = Json::array();
  for (std::size_t k = 0; k < bases.size(); ++k) {
    Json polys = Json::array(), conds = Json::array();
    for (const auto& p : bases[k].degrees) {
      polys.push_back(vector_json(p.coefficients));
      conds.push_back(number_or_null(p.condition_number));
    }
    bases_json.push_back({{"input", s.active_dims[k]}, {"coefficients", polys}, {"condition_numbers", conds}});
  }
  j["bases"] = bases_json;
  Json terms_json = Json::array();
  for (const auto& t : terms) {
    Json beta = Json::array();
    for (const auto& [dim, deg] : t.beta) beta.push_back({dim, deg});
    terms_json.push_back({{"index", t.index}, {"beta", beta}, {"coefficient", t.coefficient}});
  }
  j["terms"] = terms_json;
  const auto& d = diagnostics;
  Json history = Json::array();
  for (double h : d.residual_history) history.push_back(h);
  j["diagnostics"] = {{"residual_norm", d.residual_norm},
                      {"relative_residual", d.relative_residual},
                      {"validation_r2", number_or_null(d.validation_r2)},
                      {"active_size", d.active_size},
                      {"iterations", d.iterations},
                      {"index_set_size", d.index_set_size},
                      {"training_rows", d.training_rows},
                      {"max_terms", d.max_terms},
                      {"stop_reason", d.stop_reason},
                      {"degenerate", d.degenerate},
                      {"max_condition_number", number_or_null(d.max_condition_number)},
                      {"residual_history", history}};
  return j.dump(2);
}

PceModel PceModel::from_json(const std::string& text) {
  PceModel m;
  try {
    const Json j = Json::parse(text);
    if (j.at("format").get<std::string>() != kFormat) throw Error(ErrorCode::Parse, "not a PCE model document");
    if (j.at("format_version").get<int>() != kFormatVersion)
      throw Error(ErrorCode::Parse, "unsupported PCE model format version " + j.at("format_version").dump());
    m.order = j.at("order").get<int>();
    m.q = j.at("q").get<double>();
    const auto& s = j.at("standardization");
    m.standardization.mean = vector_from(s.at("mean"));
    m.standardization.std = vector_from(s.at("std"));
    for (const auto& f : s.at("frozen")) m.standardization.frozen.push_back(f.get<bool>());
    if (m.standardization.frozen.size() != static_cast<std::size_t>(m.standardization.mean.size()) ||
        m.standardization.std.size() != m.standardization.mean.size())
      throw Error(ErrorCode::Parse, "standardization arrays differ in length");
    for (std::size_t k = 0; k < m.standardization.frozen.size(); ++k)
      if (!m.standardization.frozen[k]) m.standardization.active_dims.push_back(static_cast<int>(k));
    const auto& bases = j.at("bases");
    if (bases.size() != m.standardization.active_dims.size())
      throw Error(ErrorCode::Parse, "basis count differs from retained inputs");
    for (std::size_t k = 0; k < bases.size(); ++k) {
      if (bases[k].at("input").get<int>() != m.standardization.active_dims[k])
        throw Error(ErrorCode::Parse, "basis order differs from retained inputs");
      UnivariateBasis b;
      const auto& polys = bases[k].at("coefficients");
      const auto& conds = bases[k].at("condition_numbers");
      for (std::size_t d = 0; d < polys.size(); ++d)
        b.degrees.push_back({vector_from(polys[d]), d < conds.size() ? number_from(conds[d]) : 1.0});
      m.bases.push_back(std::move(b));
    }
    for (const auto& t : j.at("terms")) {
      ActiveTerm term;
      term.index = t.at("index").get<std::int64_t>();
      for (const auto& p : t.at("beta")) term.beta.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
      term.coefficient = t.at("coefficient").get<double>();
      m.terms.push_back(std::move(term));
    }
    const auto& d = j.at("diagnostics");
    auto& md = m.diagnostics;
    md.residual_norm = d.at("residual_norm").get<double>();
    md.relative_residual = d.at("relative_residual").get<double>();
    md.validation_r2 = number_from(d.at("validation_r2"));
    md.active_size = d.at("active_size").get<int>();
    md.iterations = d.at("iterations").get<int>();
    md.index_set_size = d.at("index_set_size").get<std::int64_t>();
    md.training_rows = d.at("training_rows").get<int>();
    md.max_terms = d.at("max_terms").get<int>();
    md.stop_reason = d.at("stop_reason").get<std::string>();
    md.degenerate = d.at("degenerate").get<bool>();
    md.max_condition_number = number_from(d.at("max_condition_number"));
    for (const auto& h : d.at("residual_history")) md.residual_history.push_back(h.get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("PCE model: ") + e.what());
  }
  return m;
}

}  // namespace ebcs::pce
