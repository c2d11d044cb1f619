#include <cmath>
#include <limits>

#include "ebcs/ems.hpp"

namespace ebcs::ems {

namespace {

double value_or_zero(const Eigen::VectorXd& x, int column) { return column >= 0 ? x[column] : 0.0; }

milp::MilpSolution relax_and_repair(const EmsModel& model, const SolveOptions& options, bool& repaired) {
  const auto& map = model.map;
  const auto& e = model.config.ess;
  repaired = false;
  milp::LpSolution relaxed = milp::solve_lp(model.problem, options.milp.lp);
  if (relaxed.status != milp::SolveStatus::Optimal) return milp::solve_milp(model.problem, options.milp);

  // Net opposing flows: direction per step from the relaxed point.
  milp::MilpProblem fixed = model.problem;
  const Eigen::VectorXd& x = relaxed.values;
  for (std::size_t t = 0; t < map.grid_mode.size(); ++t) {
    const double u = x[map.import_kw[t]] >= x[map.export_kw[t]] ? 1.0 : 0.0;
    const double net_soc = e.charge_eff * x[map.ess_charge_kw[t]] - x[map.ess_discharge_kw[t]] / e.discharge_eff;
    const double s = net_soc >= 0.0 ? 1.0 : 0.0;
    fixed.set_bounds(map.grid_mode[t], u, u);
    fixed.set_bounds(map.ess_mode[t], s, s);
  }
  milp::LpSolution repair = milp::solve_lp(fixed, options.milp.lp);
  const double gap = options.milp.gap_abs + options.milp.gap_rel * std::abs(relaxed.objective);
  if (repair.status == milp::SolveStatus::Optimal && repair.objective - relaxed.objective <= gap) {
    repaired = true;
    milp::MilpSolution out;
    out.status = milp::SolveStatus::Optimal;
    out.objective = repair.objective;
    out.best_bound = relaxed.objective;
    out.values = repair.values;
    out.lp_iterations = relaxed.iterations + repair.iterations;
    return out;
  }
  return milp::solve_milp(model.problem, options.milp);
}

}  // namespace

DaySchedule extract_schedule(const EmsModel& model, const Eigen::VectorXd& x) {
  const auto& map = model.map;
  const auto& cfg = model.config;
  const int T = cfg.time.steps_per_day;
  const int buses = static_cast<int>(model.schedule.buses.size());
  const double dt = cfg.time.step_hours;

  DaySchedule s;
  s.step_hours = dt;
  auto series = [&](const std::vector<int>& cols) {
    Eigen::VectorXd v(T);
    for (int t = 0; t < T; ++t) v[t] = value_or_zero(x, cols[t]);
    return v;
  };
  s.import_kw = series(map.import_kw);
  s.export_kw = series(map.export_kw);
  s.ess_charge_kw = series(map.ess_charge_kw);
  s.ess_discharge_kw = series(map.ess_discharge_kw);
  s.shed_kw = series(map.shed_kw);
  s.curtail_kw = series(map.curtail_kw);
  s.grid_mode.resize(T);
  s.ess_mode.resize(T);
  for (int t = 0; t < T; ++t) {
    s.grid_mode[t] = static_cast<int>(std::lround(x[map.grid_mode[t]]));
    s.ess_mode[t] = static_cast<int>(std::lround(x[map.ess_mode[t]]));
  }

  s.bus_power_kw = Eigen::MatrixXd::Zero(buses, T);
  s.bus_soc_pct = Eigen::MatrixXd::Constant(buses, T, std::numeric_limits<double>::quiet_NaN());
  s.departure_slack_pct.resize(buses);
  const double ke = cfg.fleet.charge_eff * dt / cfg.fleet.battery_kwh * 100.0;
  double replay_error = 0.0;
  for (int b = 0; b < buses; ++b) {
    const auto& bus = model.schedule.buses[b];
    for (std::size_t k = 0; k < bus.windows.size(); ++k) {
      const auto& w = bus.windows[k];
      double soc = w.arrival_soc_pct;
      for (int t : w.steps(T)) {
        const double pw = x[map.bus_power_kw[b][t]];
        soc += ke * pw;
        s.bus_power_kw(b, t) = pw;
        s.bus_soc_pct(b, t) = soc;
        replay_error = std::max(replay_error, std::abs(soc - x[map.bus_soc_pct[b][t]]));
      }
      s.departure_slack_pct[b].push_back(x[map.departure_slack_pct[b][k]]);
    }
  }
  s.fleet_load_kw = s.bus_power_kw.colwise().sum().transpose();

  const auto& e = cfg.ess;
  const double kc = e.charge_eff * dt / e.capacity_kwh * 100.0;
  const double kd = dt / (e.discharge_eff * e.capacity_kwh) * 100.0;
  s.ess_soc_pct.resize(T);
  double soc = e.soc_init_pct;
  for (int t = 0; t < T; ++t) {
    soc += kc * s.ess_charge_kw[t] - kd * s.ess_discharge_kw[t];
    s.ess_soc_pct[t] = soc;
    replay_error = std::max(replay_error, std::abs(soc - x[map.ess_soc_pct[t]]));
  }
  s.soc_replay_error = replay_error;
  s.cost_cents = model.problem.objective(x);
  return s;
}

DaySchedule solve_day(const EmsModel& model, const SolveOptions& options) {
  bool repaired = false;
  milp::MilpSolution sol = options.mode == SolveMode::RelaxRepair ? relax_and_repair(model, options, repaired)
                                                                  : milp::solve_milp(model.problem, options.milp);
  DaySchedule s;
  if (sol.status == milp::SolveStatus::Optimal || (sol.status == milp::SolveStatus::NodeLimit && sol.values.size() > 0)) {
    s = extract_schedule(model, sol.values);
  } else if (sol.status == milp::SolveStatus::Infeasible && model.config.allow_pv_curtailment) {
    throw Error(ErrorCode::SolverBug, "station MILP reported infeasible although every window carries a slack");
  } else {
    // Without curtailment, solar beyond export and storage headroom has nowhere to go.
    s.step_hours = model.config.time.step_hours;
  }
  s.status = sol.status;
  s.best_bound_cents = sol.best_bound;
  s.nodes = sol.nodes;
  s.lp_iterations = sol.lp_iterations;
  s.repaired = repaired;
  return s;
}

double schedule_cost(const DaySchedule& s, const ScenarioInput& scenario, const StationConfig& config) {
  const Eigen::VectorXd cim = broadcast_prices(scenario.import_price_cents_per_kwh, config.time);
  const Eigen::VectorXd cex = broadcast_prices(scenario.export_price_cents_per_kwh, config.time);
  const double dt = config.time.step_hours;
  double cost = 0.0;
  for (int t = 0; t < s.steps(); ++t)
    cost += (cim[t] * s.import_kw[t] - cex[t] * s.export_kw[t] + config.grid.shed_price_cents_per_kwh * s.shed_kw[t]) * dt;
  const double slack_cost = config.grid.shed_price_cents_per_kwh * config.fleet.battery_kwh / 100.0;
  for (const auto& bus : s.departure_slack_pct)
    for (double slack : bus) cost += slack_cost * slack;
  return cost;
}

}  // namespace ebcs::ems
