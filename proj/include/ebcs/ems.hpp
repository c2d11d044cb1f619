#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ebcs/domain.hpp"
#include "ebcs/milp.hpp"

namespace ebcs::ems {

/// Column indices of every decision quantity; -1 marks "not in the model".
struct VariableMap {
  std::vector<int> import_kw, export_kw, ess_charge_kw, ess_discharge_kw, shed_kw, curtail_kw, ess_soc_pct;
  std::vector<int> grid_mode, ess_mode;
  /// [bus][step]
  std::vector<std::vector<int>> bus_power_kw, bus_soc_pct;
  /// [bus][window]
  std::vector<std::vector<int>> departure_slack_pct;
  std::vector<int> balance_row;
};

/// Station MILP for one day together with the inputs it was assembled from.
struct EmsModel {
  milp::MilpProblem problem;
  VariableMap map;
  ScenarioInput scenario;
  StationConfig config;
  ParkingSchedule schedule;
  Eigen::VectorXd import_price_step;
  Eigen::VectorXd export_price_step;
};

EmsModel build_day_model(const ScenarioInput& scenario, const StationConfig& config, const ParkingSchedule& schedule);

enum class SolveMode { Exact, RelaxRepair };

struct SolveOptions {
  SolveMode mode = SolveMode::Exact;
  milp::MilpOptions milp;
};

struct DaySchedule {
  milp::SolveStatus status = milp::SolveStatus::Infeasible;
  double step_hours = 0.25;
  Eigen::VectorXd import_kw, export_kw, ess_charge_kw, ess_discharge_kw, shed_kw, curtail_kw;
  Eigen::VectorXd fleet_load_kw;
  Eigen::VectorXd ess_soc_pct;
  Eigen::VectorXi grid_mode, ess_mode;
  /// buses x steps; zero outside parking windows.
  Eigen::MatrixXd bus_power_kw;
  /// buses x steps; NaN outside parking windows.
  Eigen::MatrixXd bus_soc_pct;
  std::vector<std::vector<double>> departure_slack_pct;
  double cost_cents = 0.0;
  double best_bound_cents = 0.0;
  long nodes = 0;
  long lp_iterations = 0;
  /// True when relax-and-repair certified the relaxation bound.
  bool repaired = false;
  /// Largest gap between solver SoC values and the replayed recursions.
  double soc_replay_error = 0.0;

  double cost_dollars() const { return cost_cents / 100.0; }
  int steps() const { return static_cast<int>(import_kw.size()); }
};

DaySchedule solve_day(const EmsModel& model, const SolveOptions& options = {});

/// Builds a DaySchedule from a full column vector of `model.problem`.
DaySchedule extract_schedule(const EmsModel& model, const Eigen::VectorXd& values);

/// Operating cost recomputed from schedule powers (cents).
double schedule_cost(const DaySchedule& schedule, const ScenarioInput& scenario, const StationConfig& config);

struct FeasibilityIssue {
  std::string family;
  int step = -1;
  int bus = -1;
  double magnitude = 0.0;
};

struct FeasibilityReport {
  std::vector<FeasibilityIssue> issues;
  double max_violation = 0.0;
  bool pass = true;

  int count(const std::string& family) const;
};

/// Re-evaluates every constraint family directly from the schedule numbers.
FeasibilityReport check_feasibility(const DaySchedule& schedule, const ScenarioInput& scenario,
                                    const StationConfig& config, const ParkingSchedule& parking, double tol = 1e-6);

void write_schedule_csv(const DaySchedule& schedule, const ScenarioInput& scenario, const StationConfig& config,
                        const ParkingSchedule& parking, std::ostream& out);
/// JSON summary: cost, status, slacks, solver statistics.
std::string schedule_summary_json(const DaySchedule& schedule, const ParkingSchedule& parking);

}  // namespace ebcs::ems
