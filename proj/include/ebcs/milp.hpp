#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ebcs::milp {

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Term {
  int column;
  double coefficient;
};

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  bool is_binary = false;
  double cost = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

/// Minimisation problem over bounded continuous and binary columns.
class MilpProblem {
 public:
  int add_variable(std::string name, double lower, double upper, double cost = 0.0);
  int add_binary(std::string name, double cost = 0.0);
  int add_constraint(std::string name, std::vector<Term> terms, Relation relation, double rhs);

  void set_cost(int column, double cost) { variables_[column].cost = cost; }
  void set_bounds(int column, double lower, double upper);

  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  int num_binaries() const;

  const Variable& variable(int column) const { return variables_[column]; }
  const Constraint& constraint(int row) const { return constraints_[row]; }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  /// Throws ValidationError on non-finite bounds, binaries outside [0,1] or dangling columns.
  void validate() const;

  double objective(const Eigen::VectorXd& x) const;
  /// Largest bound or row violation of `x` (absolute, unscaled).
  double max_violation(const Eigen::VectorXd& x) const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit, NodeLimit };

std::string_view to_string(SolveStatus status);

struct LpOptions {
  double feas_tol = 1e-6;
  double opt_tol = 1e-9;
  /// 0 selects 50 x variable count.
  long max_iterations = 0;
  int bland_after_degenerate = 1000;
  int refactor_interval = 64;
};

struct LpSolution {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;
  Eigen::VectorXd values;
  /// Row duals of the original (unscaled) constraints.
  Eigen::VectorXd duals;
  Eigen::VectorXd reduced_costs;
  long iterations = 0;
};

struct MilpOptions {
  double feas_tol = 1e-6;
  double int_tol = 1e-6;
  double gap_abs = 1e-6;
  double gap_rel = 1e-6;
  long node_limit = 200000;
  LpOptions lp;
};

struct MilpSolution {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;
  double best_bound = 0.0;
  Eigen::VectorXd values;
  long nodes = 0;
  long lp_iterations = 0;
};

/// Simplex basis snapshot usable as a warm start for a problem with the same rows and columns.
struct Basis {
  std::vector<int> head;
  std::vector<std::int8_t> state;
};

/// Bounded-variable primal simplex over one fixed constraint matrix. Column
/// bounds may be changed between solves; the last optimal basis is reused.
class LpSolver {
 public:
  explicit LpSolver(const MilpProblem& problem, LpOptions options = {});
  ~LpSolver();
  LpSolver(LpSolver&&) noexcept;
  LpSolver& operator=(LpSolver&&) noexcept;

  void set_bounds(int column, double lower, double upper);
  void reset_bounds();

  LpSolution solve();
  Basis basis() const;
  void set_basis(const Basis& basis);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// LP relaxation: binaries are treated as continuous on their bounds.
LpSolution solve_lp(const MilpProblem& problem, const LpOptions& options = {});

/// Best-bound branch and bound with most-fractional branching.
MilpSolution solve_milp(const MilpProblem& problem, const MilpOptions& options = {});

/// Enumerates all binary assignments (at most 20 binaries); test oracle.
MilpSolution brute_force_milp(const MilpProblem& problem, const LpOptions& options = {});

/// LP-format style dump for debugging.
void write_lp_text(const MilpProblem& problem, std::ostream& out);

}  // namespace ebcs::milp
