#include <ostream>

#include <json.hpp>

#include "ebcs/ems.hpp"
#include "util/text.hpp"

namespace ebcs::ems {

using util::format_double;

void write_schedule_csv(const DaySchedule& s, const ScenarioInput& scenario, const StationConfig& config,
                        const ParkingSchedule& parking, std::ostream& out) {
  const Eigen::VectorXd price = broadcast_prices(scenario.import_price_cents_per_kwh, config.time);
  out << "step,hour,solar_kw,import_price_cents_per_kwh,import_kw,export_kw,ess_charge_kw,ess_discharge_kw,shed_kw,"
         "curtail_kw,fleet_load_kw,ess_soc_pct,grid_mode,ess_mode";
  for (const auto& bus : parking.buses) out << ",bus_" << bus.name << "_kw";
  for (const auto& bus : parking.buses) out << ",bus_" << bus.name << "_soc_pct";
  out << '\n';
  for (int t = 0; t < s.steps(); ++t) {
    out << t << ',' << format_double(t * s.step_hours) << ',' << format_double(scenario.solar_kw[t]) << ','
        << format_double(price[t]) << ',' << format_double(s.import_kw[t]) << ',' << format_double(s.export_kw[t])
        << ',' << format_double(s.ess_charge_kw[t]) << ',' << format_double(s.ess_discharge_kw[t]) << ','
        << format_double(s.shed_kw[t]) << ',' << format_double(s.curtail_kw[t]) << ','
        << format_double(s.fleet_load_kw[t]) << ',' << format_double(s.ess_soc_pct[t]) << ',' << s.grid_mode[t] << ','
        << s.ess_mode[t];
    for (Eigen::Index b = 0; b < s.bus_power_kw.rows(); ++b) out << ',' << format_double(s.bus_power_kw(b, t));
    for (Eigen::Index b = 0; b < s.bus_soc_pct.rows(); ++b) out << ',' << format_double(s.bus_soc_pct(b, t));
    out << '\n';
  }
}

std::string schedule_summary_json(const DaySchedule& s, const ParkingSchedule& parking) {
  nlohmann::ordered_json j;
  j["status"] = std::string(milp::to_string(s.status));
  j["cost_cents"] = s.cost_cents;
  j["cost_dollars"] = s.cost_dollars();
  j["best_bound_cents"] = s.best_bound_cents;
  j["nodes"] = s.nodes;
  j["lp_iterations"] = s.lp_iterations;
  j["relax_repair_certified"] = s.repaired;
  j["soc_replay_error"] = s.soc_replay_error;
  double import_kwh = 0.0, export_kwh = 0.0, shed_kwh = 0.0;
  for (int t = 0; t < s.steps(); ++t) {
    import_kwh += s.import_kw[t] * s.step_hours;
    export_kwh += s.export_kw[t] * s.step_hours;
    shed_kwh += s.shed_kw[t] * s.step_hours;
  }
  j["import_kwh"] = import_kwh;
  j["export_kwh"] = export_kwh;
  j["shed_kwh"] = shed_kwh;
  auto slacks = nlohmann::ordered_json::array();
  for (std::size_t b = 0; b < parking.buses.size() && b < s.departure_slack_pct.size(); ++b)
    for (std::size_t k = 0; k < s.departure_slack_pct[b].size(); ++k)
      slacks.push_back({{"bus", parking.buses[b].name}, {"window", k + 1}, {"slack_pct", s.departure_slack_pct[b][k]}});
  j["departure_slacks"] = slacks;
  return j.dump(2);
}

}  // namespace ebcs::ems
