#include <algorithm>
#include <cmath>
#include <limits>

#include "ebcs/ems.hpp"

namespace ebcs::ems {

int FeasibilityReport::count(const std::string& family) const {
  return static_cast<int>(
      std::count_if(issues.begin(), issues.end(), [&](const FeasibilityIssue& i) { return i.family == family; }));
}

FeasibilityReport check_feasibility(const DaySchedule& s, const ScenarioInput& scenario, const StationConfig& config,
                                    const ParkingSchedule& parking, double tol) {
  FeasibilityReport report;
  auto flag = [&](const char* family, int step, int bus, double magnitude) {
    report.max_violation = std::max(report.max_violation, magnitude);
    if (magnitude > tol) report.issues.push_back({family, step, bus, magnitude});
  };
  auto above = [](double value, double limit) { return std::max(0.0, value - limit); };

  const int T = config.time.steps_per_day;
  const double dt = config.time.step_hours;
  const auto& g = config.grid;
  const auto& e = config.ess;
  const auto& f = config.fleet;
  const int buses = static_cast<int>(parking.buses.size());

  if (s.steps() != T || s.bus_power_kw.rows() != buses || s.bus_power_kw.cols() != T) {
    flag("shape", -1, -1, std::numeric_limits<double>::infinity());
    report.pass = false;
    return report;
  }

  for (int t = 0; t < T; ++t) {
    const int u = s.grid_mode[t];
    const int w = s.ess_mode[t];
    flag("binary", t, -1, (u == 0 || u == 1) && (w == 0 || w == 1) ? 0.0 : 1.0);

    flag("import_limit", t, -1, std::max(above(s.import_kw[t], g.import_limit_kw * u), -s.import_kw[t]));
    flag("export_limit", t, -1, std::max(above(s.export_kw[t], g.export_limit_kw * (1 - u)), -s.export_kw[t]));
    flag("ess_charge_limit", t, -1, std::max(above(s.ess_charge_kw[t], e.power_limit_kw * w), -s.ess_charge_kw[t]));
    flag("ess_discharge_limit", t, -1,
         std::max(above(s.ess_discharge_kw[t], e.power_limit_kw * (1 - w)), -s.ess_discharge_kw[t]));

    double load = 0.0;
    for (int b = 0; b < buses; ++b) load += s.bus_power_kw(b, t);
    const double curtail = config.allow_pv_curtailment ? s.curtail_kw[t] : 0.0;
    flag("curtailment", t, -1, std::max({-curtail, above(curtail, scenario.solar_kw[t]),
                                         config.allow_pv_curtailment ? 0.0 : std::abs(s.curtail_kw[t])}));
    const double balance = s.import_kw[t] + s.ess_discharge_kw[t] + scenario.solar_kw[t] + s.shed_kw[t] -
                           s.export_kw[t] - s.ess_charge_kw[t] - load - curtail;
    flag("power_balance", t, -1, std::abs(balance));
    flag("shed", t, -1, std::max(-s.shed_kw[t], above(s.shed_kw[t], load)));
    flag("fleet_load", t, -1, std::max(above(load, f.effective_load_max_kw()), above(f.fleet_load_min_kw, load)));
  }

  const double kc = e.charge_eff * dt / e.capacity_kwh * 100.0;
  const double kd = dt / (e.discharge_eff * e.capacity_kwh) * 100.0;
  double soc = e.soc_init_pct;
  for (int t = 0; t < T; ++t) {
    soc += kc * s.ess_charge_kw[t] - kd * s.ess_discharge_kw[t];
    flag("ess_soc_recursion", t, -1, std::abs(soc - s.ess_soc_pct[t]));
    flag("ess_soc_bounds", t, -1, std::max(above(s.ess_soc_pct[t], e.soc_max_pct), above(e.soc_min_pct, s.ess_soc_pct[t])));
  }
  if (T > 0) flag("ess_initial", 0, -1, std::abs(s.ess_soc_pct[0] - e.soc_init_pct));
  if (T > 1) flag("ess_cycle", T - 1, -1, std::abs(s.ess_soc_pct[0] - s.ess_soc_pct[T - 1]));

  const double ke = f.charge_eff * dt / f.battery_kwh * 100.0;
  for (int b = 0; b < buses; ++b) {
    const auto& bus = parking.buses[b];
    std::vector<bool> inside(T, false);
    for (std::size_t k = 0; k < bus.windows.size(); ++k) {
      const auto& win = bus.windows[k];
      double bus_soc = win.arrival_soc_pct;
      int last = -1;
      for (int t : win.steps(T)) {
        inside[t] = true;
        const double pw = s.bus_power_kw(b, t);
        flag("charger_limit", t, b, std::max(-pw, above(pw, f.charger_limit_kw)));
        bus_soc += ke * pw;
        flag("bus_soc_recursion", t, b, std::isnan(s.bus_soc_pct(b, t)) ? 1.0 : std::abs(bus_soc - s.bus_soc_pct(b, t)));
        flag("bus_soc_bounds", t, b, std::max(above(s.bus_soc_pct(b, t), 100.0), -s.bus_soc_pct(b, t)));
        last = t;
      }
      const double slack = k < s.departure_slack_pct[b].size() ? s.departure_slack_pct[b][k] : 0.0;
      const double final_soc = last >= 0 ? s.bus_soc_pct(b, last) : win.arrival_soc_pct;
      flag("departure_soc", last, b, std::max(above(win.departure_target_soc_pct, final_soc + slack), -slack));
    }
    for (int t = 0; t < T; ++t)
      if (!inside[t]) flag("charging_outside_window", t, b, std::abs(s.bus_power_kw(b, t)));
  }

  report.pass = report.issues.empty();
  return report;
}

}  // namespace ebcs::ems
