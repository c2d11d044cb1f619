#include <cmath>
#include <limits>

#include "ebcs/error.hpp"
#include "ebcs/milp.hpp"

namespace ebcs::milp {

MilpSolution brute_force_milp(const MilpProblem& problem, const LpOptions& options) {
  problem.validate();
  std::vector<int> binaries;
  for (int j = 0; j < problem.num_variables(); ++j)
    if (problem.variable(j).is_binary) binaries.push_back(j);
  if (binaries.size() > 20)
    throw Error(ErrorCode::TooManyBinaries, std::to_string(binaries.size()) + " binaries exceed the limit of 20");

  MilpSolution best;
  best.objective = std::numeric_limits<double>::infinity();
  bool any_iter_limit = false;
  LpSolver lp(problem, options);

  const std::uint64_t count = std::uint64_t{1} << binaries.size();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    bool admissible = true;
    for (std::size_t k = 0; k < binaries.size(); ++k) {
      const double value = (mask >> k) & 1U ? 1.0 : 0.0;
      const auto& v = problem.variable(binaries[k]);
      if (value < v.lower || value > v.upper) admissible = false;
      lp.set_bounds(binaries[k], value, value);
    }
    if (!admissible) continue;
    ++best.nodes;
    LpSolution sol = lp.solve();
    best.lp_iterations += sol.iterations;
    if (sol.status == SolveStatus::Unbounded) {
      best.status = SolveStatus::Unbounded;
      return best;
    }
    if (sol.status == SolveStatus::IterLimit) any_iter_limit = true;
    if (sol.status != SolveStatus::Optimal) continue;
    if (sol.objective < best.objective) {
      best.objective = sol.objective;
      best.values = sol.values;
      best.status = SolveStatus::Optimal;
    }
  }
  if (best.status != SolveStatus::Optimal) best.status = any_iter_limit ? SolveStatus::IterLimit : SolveStatus::Infeasible;
  best.best_bound = best.objective;
  return best;
}

}  // namespace ebcs::milp
