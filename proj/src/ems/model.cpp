#include <string>

#include "ebcs/ems.hpp"

namespace ebcs::ems {

namespace {

using milp::Relation;
using milp::Term;

std::string tag(const char* what, int t) { return std::string(what) + "[" + std::to_string(t) + "]"; }

}  // namespace

EmsModel build_day_model(const ScenarioInput& scenario, const StationConfig& config, const ParkingSchedule& schedule) {
  validate_config(config);
  validate_scenario(scenario, config.time);
  {
    auto v = check_schedule(schedule, config);
    for (const auto& issue : v)
      if (issue.message.find("outside the day grid") != std::string::npos)
        throw Error(ErrorCode::ScheduleMismatch, issue.field + ": " + issue.message);
    if (!v.empty()) throw ValidationError(std::move(v));
  }

  EmsModel model;
  model.scenario = scenario;
  model.config = config;
  model.schedule = schedule;
  model.import_price_step = broadcast_prices(scenario.import_price_cents_per_kwh, config.time);
  model.export_price_step = broadcast_prices(scenario.export_price_cents_per_kwh, config.time);

  auto& p = model.problem;
  auto& map = model.map;
  const int T = config.time.steps_per_day;
  const double dt = config.time.step_hours;
  const auto& g = config.grid;
  const auto& e = config.ess;
  const auto& f = config.fleet;
  const int buses = static_cast<int>(schedule.buses.size());

  for (auto* v : {&map.import_kw, &map.export_kw, &map.ess_charge_kw, &map.ess_discharge_kw, &map.shed_kw,
                  &map.curtail_kw, &map.ess_soc_pct, &map.grid_mode, &map.ess_mode, &map.balance_row})
    v->assign(T, -1);
  map.bus_power_kw.assign(buses, std::vector<int>(T, -1));
  map.bus_soc_pct.assign(buses, std::vector<int>(T, -1));
  map.departure_slack_pct.resize(buses);

  std::vector<int> parked(T, 0);
  for (const auto& bus : schedule.buses)
    for (const auto& w : bus.windows)
      for (int t : w.steps(T)) ++parked[t];

  const double fleet_max = f.effective_load_max_kw();
  for (int t = 0; t < T; ++t) {
    map.import_kw[t] = p.add_variable(tag("p_im", t), 0.0, g.import_limit_kw, model.import_price_step[t] * dt);
    map.export_kw[t] = p.add_variable(tag("p_ex", t), 0.0, g.export_limit_kw, -model.export_price_step[t] * dt);
    map.ess_charge_kw[t] = p.add_variable(tag("p_ess_ch", t), 0.0, e.power_limit_kw);
    map.ess_discharge_kw[t] = p.add_variable(tag("p_ess_dis", t), 0.0, e.power_limit_kw);
    const double shed_cap = parked[t] > 0 ? std::min(fleet_max, parked[t] * f.charger_limit_kw) : 0.0;
    map.shed_kw[t] = p.add_variable(tag("p_shed", t), 0.0, shed_cap, g.shed_price_cents_per_kwh * dt);
    if (config.allow_pv_curtailment) map.curtail_kw[t] = p.add_variable(tag("p_curt", t), 0.0, scenario.solar_kw[t]);
    map.ess_soc_pct[t] = p.add_variable(tag("soc_ess", t), e.soc_min_pct, e.soc_max_pct);
    map.grid_mode[t] = p.add_binary(tag("u_g", t));
    map.ess_mode[t] = p.add_binary(tag("u_ess", t));
  }

  const double ke = f.charge_eff * dt / f.battery_kwh * 100.0;
  const double slack_cost = g.shed_price_cents_per_kwh * f.battery_kwh / 100.0;
  for (int b = 0; b < buses; ++b) {
    const auto& bus = schedule.buses[b];
    for (std::size_t k = 0; k < bus.windows.size(); ++k) {
      const auto& w = bus.windows[k];
      const auto steps = w.steps(T);
      int prev_soc = -1;
      for (int t : steps) {
        const int pw = p.add_variable(bus.name + "_p" + tag("", t), 0.0, f.charger_limit_kw);
        const int soc = p.add_variable(bus.name + "_soc" + tag("", t), 0.0, 100.0);
        map.bus_power_kw[b][t] = pw;
        map.bus_soc_pct[b][t] = soc;
        // SoC(t) = SoC(t-1) + eta * p * dt / E * 100, starting from the arrival SoC.
        if (prev_soc < 0)
          p.add_constraint(bus.name + "_soc_arrive" + tag("", t), {{soc, 1.0}, {pw, -ke}}, Relation::Equal,
                           w.arrival_soc_pct);
        else
          p.add_constraint(bus.name + "_soc_link" + tag("", t), {{soc, 1.0}, {prev_soc, -1.0}, {pw, -ke}},
                           Relation::Equal, 0.0);
        prev_soc = soc;
      }
      const int slack = p.add_variable(bus.name + "_slack" + tag("", static_cast<int>(k)), 0.0,
                                       w.departure_target_soc_pct, slack_cost);
      map.departure_slack_pct[b].push_back(slack);
      std::vector<Term> row{{slack, 1.0}};
      if (prev_soc >= 0)
        row.push_back({prev_soc, 1.0});
      p.add_constraint(bus.name + "_depart" + tag("", static_cast<int>(k)), std::move(row), Relation::GreaterEqual,
                       steps.empty() ? w.departure_target_soc_pct - w.arrival_soc_pct : w.departure_target_soc_pct);
    }
  }

  const double kc = e.charge_eff * dt / e.capacity_kwh * 100.0;
  const double kd = dt / (e.discharge_eff * e.capacity_kwh) * 100.0;
  for (int t = 0; t < T; ++t) {
    p.add_constraint(tag("grid_import", t), {{map.import_kw[t], 1.0}, {map.grid_mode[t], -g.import_limit_kw}},
                     Relation::LessEqual, 0.0);
    p.add_constraint(tag("grid_export", t), {{map.export_kw[t], 1.0}, {map.grid_mode[t], g.export_limit_kw}},
                     Relation::LessEqual, g.export_limit_kw);
    p.add_constraint(tag("ess_charge", t), {{map.ess_charge_kw[t], 1.0}, {map.ess_mode[t], -e.power_limit_kw}},
                     Relation::LessEqual, 0.0);
    p.add_constraint(tag("ess_discharge", t), {{map.ess_discharge_kw[t], 1.0}, {map.ess_mode[t], e.power_limit_kw}},
                     Relation::LessEqual, e.power_limit_kw);

    std::vector<Term> balance{{map.import_kw[t], 1.0},
                              {map.ess_discharge_kw[t], 1.0},
                              {map.shed_kw[t], 1.0},
                              {map.export_kw[t], -1.0},
                              {map.ess_charge_kw[t], -1.0}};
    if (map.curtail_kw[t] >= 0) balance.push_back({map.curtail_kw[t], -1.0});
    std::vector<Term> load;
    for (int b = 0; b < buses; ++b)
      if (map.bus_power_kw[b][t] >= 0) {
        balance.push_back({map.bus_power_kw[b][t], -1.0});
        load.push_back({map.bus_power_kw[b][t], 1.0});
      }
    map.balance_row[t] = p.add_constraint(tag("balance", t), std::move(balance), Relation::Equal, -scenario.solar_kw[t]);

    if (!load.empty()) {
      std::vector<Term> shed_row = load;
      for (auto& term : shed_row) term.coefficient = -1.0;
      shed_row.push_back({map.shed_kw[t], 1.0});
      p.add_constraint(tag("shed_le_load", t), std::move(shed_row), Relation::LessEqual, 0.0);
      if (fleet_max < static_cast<double>(load.size()) * f.charger_limit_kw)
        p.add_constraint(tag("fleet_max", t), load, Relation::LessEqual, fleet_max);
    }
    if (f.fleet_load_min_kw > 0.0) p.add_constraint(tag("fleet_min", t), load, Relation::GreaterEqual, f.fleet_load_min_kw);

    std::vector<Term> soc{{map.ess_soc_pct[t], 1.0}, {map.ess_charge_kw[t], -kc}, {map.ess_discharge_kw[t], kd}};
    double rhs = 0.0;
    if (t == 0)
      rhs = e.soc_init_pct;
    else
      soc.push_back({map.ess_soc_pct[t - 1], -1.0});
    p.add_constraint(tag("ess_soc", t), std::move(soc), Relation::Equal, rhs);
  }
  // SoC at the first step is the given initial value, and the day ends where it started.
  p.add_constraint("ess_initial", {{map.ess_soc_pct[0], 1.0}}, Relation::Equal, e.soc_init_pct);
  if (T > 1)
    p.add_constraint("ess_cycle", {{map.ess_soc_pct[0], 1.0}, {map.ess_soc_pct[T - 1], -1.0}}, Relation::Equal, 0.0);

  return model;
}

}  // namespace ebcs::ems
