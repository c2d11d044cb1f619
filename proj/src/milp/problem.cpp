#include <algorithm>
#include <cmath>
#include <ostream>

#include "ebcs/error.hpp"
#include "ebcs/milp.hpp"

namespace ebcs::milp {

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "OPTIMAL";
    case SolveStatus::Infeasible: return "INFEASIBLE";
    case SolveStatus::Unbounded: return "UNBOUNDED";
    case SolveStatus::IterLimit: return "ITER_LIMIT";
    case SolveStatus::NodeLimit: return "NODE_LIMIT";
  }
  return "UNKNOWN";
}

int MilpProblem::add_variable(std::string name, double lower, double upper, double cost) {
  variables_.push_back({std::move(name), lower, upper, false, cost});
  return static_cast<int>(variables_.size()) - 1;
}

int MilpProblem::add_binary(std::string name, double cost) {
  variables_.push_back({std::move(name), 0.0, 1.0, true, cost});
  return static_cast<int>(variables_.size()) - 1;
}

int MilpProblem::add_constraint(std::string name, std::vector<Term> terms, Relation relation, double rhs) {
  constraints_.push_back({std::move(name), std::move(terms), relation, rhs});
  return static_cast<int>(constraints_.size()) - 1;
}

void MilpProblem::set_bounds(int column, double lower, double upper) {
  variables_[column].lower = lower;
  variables_[column].upper = upper;
}

int MilpProblem::num_binaries() const {
  return static_cast<int>(std::count_if(variables_.begin(), variables_.end(), [](const Variable& v) { return v.is_binary; }));
}

void MilpProblem::validate() const {
  std::vector<Violation> out;
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    const auto& v = variables_[j];
    const std::string path = "variable[" + std::to_string(j) + "] " + v.name;
    if (!std::isfinite(v.lower) || !std::isfinite(v.upper)) out.push_back({path, "bounds must be finite"});
    else if (v.lower > v.upper) out.push_back({path, "lower bound exceeds upper bound"});
    if (v.is_binary && (v.lower < 0.0 || v.upper > 1.0)) out.push_back({path, "binary bounds must lie in [0,1]"});
    if (!std::isfinite(v.cost)) out.push_back({path, "cost must be finite"});
  }
  const int n = num_variables();
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const auto& c = constraints_[i];
    const std::string path = "constraint[" + std::to_string(i) + "] " + c.name;
    if (!std::isfinite(c.rhs)) out.push_back({path, "rhs must be finite"});
    for (const auto& t : c.terms) {
      if (t.column < 0 || t.column >= n) out.push_back({path, "references missing column " + std::to_string(t.column)});
      else if (!std::isfinite(t.coefficient)) out.push_back({path, "coefficient must be finite"});
    }
  }
  if (!out.empty()) throw ValidationError(std::move(out));
}

double MilpProblem::objective(const Eigen::VectorXd& x) const {
  double obj = 0.0;
  for (std::size_t j = 0; j < variables_.size(); ++j) obj += variables_[j].cost * x[static_cast<Eigen::Index>(j)];
  return obj;
}

double MilpProblem::max_violation(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    const double v = x[static_cast<Eigen::Index>(j)];
    worst = std::max({worst, variables_[j].lower - v, v - variables_[j].upper});
  }
  for (const auto& c : constraints_) {
    double activity = 0.0;
    for (const auto& t : c.terms) activity += t.coefficient * x[t.column];
    switch (c.relation) {
      case Relation::LessEqual: worst = std::max(worst, activity - c.rhs); break;
      case Relation::GreaterEqual: worst = std::max(worst, c.rhs - activity); break;
      case Relation::Equal: worst = std::max(worst, std::abs(activity - c.rhs)); break;
    }
  }
  return worst;
}

void write_lp_text(const MilpProblem& problem, std::ostream& out) {
  auto emit_terms = [&](const auto& terms) {
    bool first = true;
    for (const auto& [col, coef] : terms) {
      if (coef == 0.0) continue;
      out << (coef < 0 ? " - " : (first ? " " : " + ")) << std::abs(coef) << ' ' << problem.variable(col).name;
      first = false;
    }
    if (first) out << " 0";
  };

  out << "Minimize\n obj:";
  std::vector<std::pair<int, double>> obj;
  for (int j = 0; j < problem.num_variables(); ++j) obj.emplace_back(j, problem.variable(j).cost);
  emit_terms(obj);
  out << "\nSubject To\n";
  for (const auto& c : problem.constraints()) {
    out << ' ' << c.name << ':';
    std::vector<std::pair<int, double>> row;
    for (const auto& t : c.terms) row.emplace_back(t.column, t.coefficient);
    emit_terms(row);
    out << (c.relation == Relation::LessEqual ? " <= " : c.relation == Relation::Equal ? " = " : " >= ") << c.rhs
        << '\n';
  }
  out << "Bounds\n";
  for (const auto& v : problem.variables())
    if (!v.is_binary) out << ' ' << v.lower << " <= " << v.name << " <= " << v.upper << '\n';
  out << "Binaries\n";
  for (const auto& v : problem.variables())
    if (v.is_binary) out << ' ' << v.name << '\n';
  out << "End\n";
}

}  // namespace ebcs::milp
