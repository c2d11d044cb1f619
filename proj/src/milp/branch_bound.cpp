#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <queue>

#include "ebcs/milp.hpp"

namespace ebcs::milp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRoundingTol = 1e-7;
constexpr long kEagerFixNodes = 32;
constexpr long kFixInterval = 16;

struct Node {
  double bound;
  long id;
  int depth;
  std::vector<std::pair<int, std::int8_t>> fixes;
  std::shared_ptr<const Basis> basis;
};

struct NodeOrder {
  // priority_queue pops the "largest"; best bound first, then deepest, then oldest.
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  }
};

/// Rows touched by each binary, used by the rounding heuristic.
struct BinaryRows {
  std::vector<int> binaries;
  std::vector<std::vector<std::pair<int, double>>> rows;  // per column, (row, coefficient)
};

BinaryRows index_binaries(const MilpProblem& p) {
  BinaryRows out;
  out.rows.resize(p.num_variables());
  for (int j = 0; j < p.num_variables(); ++j)
    if (p.variable(j).is_binary) out.binaries.push_back(j);
  for (int i = 0; i < p.num_constraints(); ++i)
    for (const auto& t : p.constraint(i).terms)
      if (p.variable(t.column).is_binary) out.rows[t.column].emplace_back(i, t.coefficient);
  return out;
}

double row_violation(const Constraint& c, double activity) {
  const double tol = kRoundingTol * std::max(1.0, std::abs(c.rhs));
  double v = 0.0;
  switch (c.relation) {
    case Relation::LessEqual: v = activity - c.rhs; break;
    case Relation::GreaterEqual: v = c.rhs - activity; break;
    case Relation::Equal: v = std::abs(activity - c.rhs); break;
  }
  return v > tol ? v : 0.0;
}

/// Rounds fractional binaries one at a time toward the value whose rows are
/// least violated with the continuous part of the LP point left unchanged.
/// Returns the total remaining violation; zero means `x` is feasible as is.
double round_least_violation(const MilpProblem& p, const BinaryRows& index, const std::vector<double>& lower,
                             const std::vector<double>& upper, Eigen::VectorXd& x, double int_tol) {
  std::vector<double> activity(p.num_constraints(), 0.0);
  for (int i = 0; i < p.num_constraints(); ++i)
    for (const auto& t : p.constraint(i).terms) activity[i] += t.coefficient * x[t.column];

  double total = 0.0;
  for (int j : index.binaries) {
    const double v = x[j];
    const double nearest = std::round(v);
    if (std::abs(v - nearest) <= int_tol) {
      x[j] = nearest;
      continue;
    }
    double best_target = -1.0, best_violation = kInf;
    for (double target : {nearest, 1.0 - nearest}) {
      if (target < lower[j] || target > upper[j]) continue;
      double violation = 0.0;
      for (const auto& [row, a] : index.rows[j])
        violation += row_violation(p.constraint(row), activity[row] + a * (target - v));
      if (violation < best_violation) {
        best_violation = violation;
        best_target = target;
      }
    }
    if (best_target < 0.0) return kInf;
    for (const auto& [row, a] : index.rows[j]) activity[row] += a * (best_target - v);
    x[j] = best_target;
    total += best_violation;
  }
  return total;
}

}  // namespace

MilpSolution solve_milp(const MilpProblem& problem, const MilpOptions& options) {
  problem.validate();
  MilpSolution result;
  LpSolver lp(problem, options.lp);
  const BinaryRows index = index_binaries(problem);

  std::vector<double> lower0(problem.num_variables()), upper0(problem.num_variables());
  for (int j = 0; j < problem.num_variables(); ++j) {
    lower0[j] = problem.variable(j).lower;
    upper0[j] = problem.variable(j).upper;
  }

  double incumbent = kInf;
  Eigen::VectorXd best_x;
  auto cutoff = [&] { return incumbent - (options.gap_abs + options.gap_rel * std::abs(incumbent)); };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  open.push({-kInf, next_id++, 0, {}, nullptr});
  bool incomplete = false;
  bool root = true;

  while (!open.empty()) {
    if (std::isfinite(incumbent) && open.top().bound >= cutoff()) break;
    if (result.nodes >= options.node_limit) {
      incomplete = true;
      break;
    }
    Node node = open.top();
    open.pop();
    ++result.nodes;

    lp.reset_bounds();
    std::vector<double> lower = lower0, upper = upper0;
    for (const auto& [col, value] : node.fixes) {
      lp.set_bounds(col, value, value);
      lower[col] = upper[col] = value;
    }
    if (node.basis) lp.set_basis(*node.basis);
    LpSolution sol = lp.solve();
    result.lp_iterations += sol.iterations;

    if (sol.status == SolveStatus::Unbounded && root) {
      result.status = SolveStatus::Unbounded;
      return result;
    }
    if (sol.status == SolveStatus::IterLimit) {
      if (root) {
        result.status = SolveStatus::IterLimit;
        return result;
      }
      incomplete = true;
      continue;
    }
    root = false;
    if (sol.status != SolveStatus::Optimal) continue;
    if (sol.objective >= cutoff()) continue;

    int branch = -1;
    double most = -1.0;
    for (int j : index.binaries) {
      const double v = sol.values[j];
      const double frac = std::abs(v - std::round(v));
      if (frac <= options.int_tol) continue;
      if (frac > most + 1e-12) {
        most = frac;
        branch = j;
      }
    }

    if (branch < 0) {
      incumbent = sol.objective;
      best_x = sol.values;
      for (int j : index.binaries) best_x[j] = std::round(best_x[j]);
      continue;
    }

    auto basis = std::make_shared<const Basis>(lp.basis());
    Eigen::VectorXd rounded = sol.values;
    const double violation = round_least_violation(problem, index, lower, upper, rounded, options.int_tol);
    if (violation == 0.0) {
      const double obj = problem.objective(rounded);
      if (obj < incumbent) {
        incumbent = obj;
        best_x = rounded;
      }
    } else if (std::isfinite(violation) && (result.nodes <= kEagerFixNodes || result.nodes % kFixInterval == 0)) {
      // Keep the rounded binaries and let the continuous part re-balance.
      for (int j : index.binaries) lp.set_bounds(j, rounded[j], rounded[j]);
      LpSolution fixed = lp.solve();
      result.lp_iterations += fixed.iterations;
      if (fixed.status == SolveStatus::Optimal && fixed.objective < incumbent) {
        incumbent = fixed.objective;
        best_x = fixed.values;
        for (int j : index.binaries) best_x[j] = std::round(best_x[j]);
      }
    }
    if (sol.objective >= cutoff()) continue;

    for (std::int8_t value : {std::int8_t{0}, std::int8_t{1}}) {
      if (value < lower[branch] || value > upper[branch]) continue;
      Node child{sol.objective, next_id++, node.depth + 1, node.fixes, basis};
      child.fixes.emplace_back(branch, value);
      open.push(std::move(child));
    }
  }

  if (!std::isfinite(incumbent)) {
    result.status = incomplete ? SolveStatus::NodeLimit : SolveStatus::Infeasible;
    result.best_bound = open.empty() ? kInf : open.top().bound;
    return result;
  }

  // Re-solve the continuous part with every binary fixed to its incumbent value.
  lp.reset_bounds();
  for (int j : index.binaries) lp.set_bounds(j, best_x[j], best_x[j]);
  LpSolution polish = lp.solve();
  result.lp_iterations += polish.iterations;
  if (polish.status == SolveStatus::Optimal && polish.objective <= incumbent + 1e-9 * (1.0 + std::abs(incumbent))) {
    incumbent = polish.objective;
    best_x = polish.values;
    for (int j : index.binaries) best_x[j] = std::round(best_x[j]);
  }

  result.objective = incumbent;
  result.values = best_x;
  result.best_bound = open.empty() ? incumbent : std::min(incumbent, open.top().bound);
  result.status = incomplete ? SolveStatus::NodeLimit : SolveStatus::Optimal;
  return result;
}

}  // namespace ebcs::milp
