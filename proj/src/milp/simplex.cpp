#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "ebcs/milp.hpp"

namespace ebcs::milp {

namespace {

constexpr std::int8_t kBasic = 0;
constexpr std::int8_t kAtLower = 1;
constexpr std::int8_t kAtUpper = 2;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Primal tolerance in the row-scaled space, and the Harris relaxation.
constexpr double kPrimalTol = 1e-9;
constexpr double kHarrisTol = 5e-10;
constexpr double kPivotTol = 1e-9;
constexpr double kDropTol = 1e-14;

}  // namespace

struct LpSolver::Impl {
  using SparseMatrix = Eigen::SparseMatrix<double>;

  struct Eta {
    int row;
    double pivot;
    std::vector<int> index;
    std::vector<double> value;
  };

  int m = 0;
  int n = 0;
  int total = 0;
  std::vector<int> col_start;
  std::vector<int> row_index;
  std::vector<double> coef;
  std::vector<double> rhs;
  std::vector<double> cost;
  std::vector<double> row_scale;
  std::vector<double> lower, upper;
  std::vector<double> lower0, upper0;
  LpOptions options;

  std::vector<int> head;
  std::vector<std::int8_t> state;
  std::vector<double> x;
  bool has_basis = false;

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  std::vector<Eta> etas;
  Eigen::VectorXd work;

  Impl(const MilpProblem& problem, LpOptions opts) : options(opts) {
    m = problem.num_constraints();
    n = problem.num_variables();
    total = n + m;

    row_scale.assign(m, 1.0);
    for (int i = 0; i < m; ++i) {
      double big = 0.0;
      for (const auto& t : problem.constraint(i).terms) big = std::max(big, std::abs(t.coefficient));
      if (big > 0.0) row_scale[i] = 1.0 / big;
    }

    std::vector<std::vector<std::pair<int, double>>> cols(n);
    for (int i = 0; i < m; ++i)
      for (const auto& t : problem.constraint(i).terms)
        if (t.coefficient != 0.0) cols[t.column].emplace_back(i, t.coefficient * row_scale[i]);

    col_start.reserve(total + 1);
    col_start.push_back(0);
    for (int j = 0; j < n; ++j) {
      auto& c = cols[j];
      std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      // merge duplicate entries for the same row
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (!row_index.empty() && static_cast<int>(row_index.size()) > col_start.back() && row_index.back() == c[k].first)
          coef.back() += c[k].second;
        else {
          row_index.push_back(c[k].first);
          coef.push_back(c[k].second);
        }
      }
      col_start.push_back(static_cast<int>(row_index.size()));
    }
    for (int i = 0; i < m; ++i) {
      row_index.push_back(i);
      coef.push_back(1.0);
      col_start.push_back(static_cast<int>(row_index.size()));
    }

    rhs.resize(m);
    cost.assign(total, 0.0);
    lower.resize(total);
    upper.resize(total);
    for (int j = 0; j < n; ++j) {
      const auto& v = problem.variable(j);
      cost[j] = v.cost;
      lower[j] = v.lower;
      upper[j] = v.upper;
    }
    for (int i = 0; i < m; ++i) {
      const auto& c = problem.constraint(i);
      rhs[i] = c.rhs * row_scale[i];
      switch (c.relation) {
        case Relation::LessEqual: lower[n + i] = 0.0; upper[n + i] = kInf; break;
        case Relation::GreaterEqual: lower[n + i] = -kInf; upper[n + i] = 0.0; break;
        case Relation::Equal: lower[n + i] = 0.0; upper[n + i] = 0.0; break;
      }
    }
    lower0 = lower;
    upper0 = upper;
    work.resize(m);
  }

  double dot_column(const Eigen::VectorXd& y, int j) const {
    double s = 0.0;
    for (int k = col_start[j]; k < col_start[j + 1]; ++k) s += y[row_index[k]] * coef[k];
    return s;
  }

  void slack_basis() {
    head.resize(m);
    state.assign(total, kAtLower);
    for (int i = 0; i < m; ++i) {
      head[i] = n + i;
      state[n + i] = kBasic;
    }
    has_basis = true;
  }

  void normalize_nonbasic() {
    x.resize(total);
    for (int j = 0; j < total; ++j) {
      if (state[j] == kBasic) continue;
      if (state[j] == kAtLower && !std::isfinite(lower[j])) state[j] = kAtUpper;
      if (state[j] == kAtUpper && !std::isfinite(upper[j])) state[j] = kAtLower;
      x[j] = state[j] == kAtLower ? lower[j] : upper[j];
      if (!std::isfinite(x[j])) x[j] = 0.0;
    }
  }

  bool refactor() {
    etas.clear();
    if (m == 0) return true;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m) * 3);
    for (int i = 0; i < m; ++i) {
      const int j = head[i];
      for (int k = col_start[j]; k < col_start[j + 1]; ++k) trip.emplace_back(row_index[k], i, coef[k]);
    }
    SparseMatrix B(m, m);
    B.setFromTriplets(trip.begin(), trip.end());
    B.makeCompressed();
    lu.compute(B);
    return lu.info() == Eigen::Success;
  }

  /// Falls back to the all-logical basis, keeping structurals at their nearest bound.
  void rebuild_from_slacks() {
    for (int j = 0; j < n; ++j) {
      if (state[j] != kBasic) continue;
      const double v = x.empty() ? lower[j] : x[j];
      state[j] = (v - lower[j] <= upper[j] - v) ? kAtLower : kAtUpper;
    }
    for (int i = 0; i < m; ++i) {
      head[i] = n + i;
      state[n + i] = kBasic;
    }
    normalize_nonbasic();
    refactor();
  }

  void ftran(Eigen::VectorXd& v) {
    if (m == 0) return;
    v = lu.solve(v);
    for (const auto& e : etas) {
      const double p = v[e.row] / e.pivot;
      if (p != 0.0)
        for (std::size_t k = 0; k < e.index.size(); ++k) v[e.index[k]] -= e.value[k] * p;
      v[e.row] = p;
    }
  }

  void btran(Eigen::VectorXd& w) {
    if (m == 0) return;
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      double s = w[it->row];
      for (std::size_t k = 0; k < it->index.size(); ++k) s -= w[it->index[k]] * it->value[k];
      w[it->row] = s / it->pivot;
    }
    w = lu.transpose().solve(w);
  }

  void recompute_basics() {
    Eigen::VectorXd r(m);
    for (int i = 0; i < m; ++i) r[i] = rhs[i];
    for (int j = 0; j < total; ++j) {
      if (state[j] == kBasic || x[j] == 0.0) continue;
      for (int k = col_start[j]; k < col_start[j + 1]; ++k) r[row_index[k]] -= coef[k] * x[j];
    }
    ftran(r);
    for (int i = 0; i < m; ++i) x[head[i]] = r[i];
  }

  LpSolution solve() {
    LpSolution out;
    if (!has_basis) slack_basis();
    normalize_nonbasic();
    if (!refactor()) rebuild_from_slacks();
    recompute_basics();

    const long max_iter = options.max_iterations > 0 ? options.max_iterations : 50L * std::max(n, 1);
    long iter = 0;
    int degenerate_run = 0;
    int stalls = 0;
    Eigen::VectorXd y(m), alpha(m);
    SolveStatus status = SolveStatus::Optimal;

    while (true) {
      if (static_cast<int>(etas.size()) >= options.refactor_interval) {
        if (!refactor()) rebuild_from_slacks();
        recompute_basics();
      }

      bool phase1 = false;
      for (int i = 0; i < m; ++i) {
        const int k = head[i];
        const double v = x[k];
        double c = 0.0;
        if (v < lower[k] - kPrimalTol) c = -1.0;
        else if (v > upper[k] + kPrimalTol) c = 1.0;
        y[i] = c;
        phase1 = phase1 || c != 0.0;
      }
      if (!phase1)
        for (int i = 0; i < m; ++i) y[i] = cost[head[i]];
      btran(y);

      const bool bland = degenerate_run >= options.bland_after_degenerate;
      int q = -1;
      double best = 0.0;
      for (int j = 0; j < total; ++j) {
        if (state[j] == kBasic || lower[j] == upper[j]) continue;
        const double d = (phase1 ? 0.0 : cost[j]) - dot_column(y, j);
        const bool eligible = (state[j] == kAtLower && d < -options.opt_tol) || (state[j] == kAtUpper && d > options.opt_tol);
        if (!eligible) continue;
        if (bland) {
          q = j;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          q = j;
        }
      }
      if (q < 0) {
        status = phase1 ? SolveStatus::Infeasible : SolveStatus::Optimal;
        break;
      }
      if (iter >= max_iter) {
        status = SolveStatus::IterLimit;
        break;
      }
      ++iter;

      alpha.setZero();
      for (int k = col_start[q]; k < col_start[q + 1]; ++k) alpha[row_index[k]] = coef[k];
      ftran(alpha);
      const double dir = state[q] == kAtLower ? 1.0 : -1.0;

      // Harris pass 1: largest step with every basic variable within its relaxed bound.
      double theta_max = kInf;
      auto bound_ratio = [&](int i, double tol, double& ratio, bool& to_upper) -> bool {
        const double a = alpha[i];
        if (std::abs(a) < kPivotTol) return false;
        const double delta = -dir * a;
        const int k = head[i];
        const double v = x[k];
        const bool below = v < lower[k] - kPrimalTol;
        const bool above = v > upper[k] + kPrimalTol;
        if (phase1 && below) {
          if (delta <= 0.0) return false;
          ratio = (lower[k] - v + tol) / delta;
          to_upper = false;
          return true;
        }
        if (phase1 && above) {
          if (delta >= 0.0) return false;
          ratio = (v - upper[k] + tol) / -delta;
          to_upper = true;
          return true;
        }
        if (delta < 0.0) {
          if (!std::isfinite(lower[k])) return false;
          ratio = (v - lower[k] + tol) / -delta;
          to_upper = false;
        } else {
          if (!std::isfinite(upper[k])) return false;
          ratio = (upper[k] - v + tol) / delta;
          to_upper = true;
        }
        return true;
      };

      for (int i = 0; i < m; ++i) {
        double r;
        bool up;
        if (bound_ratio(i, kHarrisTol, r, up)) theta_max = std::min(theta_max, r);
      }

      const double flip = upper[q] - lower[q];
      int leave = -1;
      bool leave_to_upper = false;
      double theta = kInf;
      if (std::isfinite(flip) && flip <= theta_max) {
        theta = flip;
      } else if (std::isfinite(theta_max)) {
        double best_pivot = 0.0;
        for (int i = 0; i < m; ++i) {
          double r;
          bool up;
          if (!bound_ratio(i, 0.0, r, up) || r > theta_max) continue;
          const double piv = std::abs(alpha[i]);
          const bool better = bland ? (leave < 0 || r < theta - 1e-12 || (r <= theta + 1e-12 && head[i] < head[leave]))
                                    : piv > best_pivot;
          if (better) {
            best_pivot = piv;
            leave = i;
            leave_to_upper = up;
            theta = r;
          }
        }
        theta = std::max(theta, 0.0);
      }

      if (leave < 0 && !std::isfinite(theta)) {
        if (!phase1) {
          status = SolveStatus::Unbounded;
          break;
        }
        // Phase 1 cannot be unbounded; treat as numerical trouble.
        if (++stalls > 5) {
          status = SolveStatus::Infeasible;
          break;
        }
        if (!refactor()) rebuild_from_slacks();
        recompute_basics();
        continue;
      }

      x[q] += dir * theta;
      if (theta != 0.0)
        for (int i = 0; i < m; ++i)
          if (alpha[i] != 0.0) x[head[i]] -= dir * alpha[i] * theta;

      degenerate_run = theta < 1e-12 ? degenerate_run + 1 : 0;

      if (leave < 0) {
        state[q] = state[q] == kAtLower ? kAtUpper : kAtLower;
        x[q] = state[q] == kAtLower ? lower[q] : upper[q];
        continue;
      }

      const int k = head[leave];
      state[k] = leave_to_upper ? kAtUpper : kAtLower;
      x[k] = leave_to_upper ? upper[k] : lower[k];
      head[leave] = q;
      state[q] = kBasic;

      Eta e;
      e.row = leave;
      e.pivot = alpha[leave];
      for (int i = 0; i < m; ++i)
        if (i != leave && std::abs(alpha[i]) > kDropTol) {
          e.index.push_back(i);
          e.value.push_back(alpha[i]);
        }
      etas.push_back(std::move(e));
    }

    out.status = status;
    out.iterations = iter;
    out.values = Eigen::Map<const Eigen::VectorXd>(x.data(), n);
    out.objective = 0.0;
    for (int j = 0; j < n; ++j) out.objective += cost[j] * x[j];

    if (status == SolveStatus::Optimal) {
      for (int i = 0; i < m; ++i) y[i] = cost[head[i]];
      btran(y);
      out.duals.resize(m);
      for (int i = 0; i < m; ++i) out.duals[i] = y[i] * row_scale[i];
      out.reduced_costs.resize(n);
      for (int j = 0; j < n; ++j) out.reduced_costs[j] = state[j] == kBasic ? 0.0 : cost[j] - dot_column(y, j);
    }
    return out;
  }
};

LpSolver::LpSolver(const MilpProblem& problem, LpOptions options)
    : impl_(std::make_unique<Impl>(problem, options)) {}
LpSolver::~LpSolver() = default;
LpSolver::LpSolver(LpSolver&&) noexcept = default;
LpSolver& LpSolver::operator=(LpSolver&&) noexcept = default;

void LpSolver::set_bounds(int column, double lower, double upper) {
  impl_->lower[column] = lower;
  impl_->upper[column] = upper;
}

void LpSolver::reset_bounds() {
  impl_->lower = impl_->lower0;
  impl_->upper = impl_->upper0;
}

LpSolution LpSolver::solve() { return impl_->solve(); }

Basis LpSolver::basis() const { return {impl_->head, impl_->state}; }

void LpSolver::set_basis(const Basis& basis) {
  if (static_cast<int>(basis.head.size()) != impl_->m || static_cast<int>(basis.state.size()) != impl_->total) return;
  impl_->head = basis.head;
  impl_->state = basis.state;
  impl_->has_basis = true;
}

LpSolution solve_lp(const MilpProblem& problem, const LpOptions& options) {
  problem.validate();
  LpSolver solver(problem, options);
  return solver.solve();
}

}  // namespace ebcs::milp
