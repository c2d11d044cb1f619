#include "ebcs/domain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ebcs {

namespace {

bool finite(double v) { return std::isfinite(v); }

void require(std::vector<Violation>& out, bool ok, std::string field, std::string message) {
  if (!ok) out.push_back({std::move(field), std::move(message)});
}

}  // namespace

std::vector<StepRange> ParkingWindow::segments(int steps_per_day) const {
  if (!wraps()) return {{arrival_step, departure_step}};
  std::vector<StepRange> out{{arrival_step, steps_per_day}};
  if (departure_step > 0) out.push_back({0, departure_step});
  return out;
}

std::vector<int> ParkingWindow::steps(int steps_per_day) const {
  std::vector<int> out;
  for (const auto& seg : segments(steps_per_day))
    for (int t = seg.begin; t < seg.end; ++t) out.push_back(t);
  return out;
}

std::size_t ParkingSchedule::window_count() const {
  std::size_t n = 0;
  for (const auto& bus : buses) n += bus.windows.size();
  return n;
}

Eigen::VectorXd broadcast_prices(const Eigen::VectorXd& price_points, const TimeGrid& grid) {
  const int T = grid.steps_per_day;
  const double h = grid.hours_per_price_point;
  Eigen::VectorXd out(T);
  for (int t = 0; t < T; ++t) {
    const double begin = t * grid.step_hours;
    const double end = begin + grid.step_hours;
    const auto first = static_cast<Eigen::Index>(std::floor(begin / h + 1e-9));
    const auto last = std::min(static_cast<Eigen::Index>(std::ceil(end / h - 1e-9)), price_points.size());
    double acc = 0.0;
    for (Eigen::Index p = first; p < last; ++p)
      acc += price_points[p] * (std::min(end, (p + 1) * h) - std::max(begin, p * h));
    out[t] = acc / grid.step_hours;
  }
  return out;
}

std::vector<Violation> check_time_grid(const TimeGrid& grid) {
  std::vector<Violation> v;
  require(v, finite(grid.step_hours) && grid.step_hours > 0.0, "time.step_hours", "must be > 0");
  require(v, grid.steps_per_day > 0, "time.steps_per_day", "must be a positive integer");
  if (finite(grid.step_hours) && grid.step_hours > 0.0 && grid.steps_per_day > 0)
    require(v, std::abs(grid.steps_per_day * grid.step_hours - 24.0) < 1e-9, "time.steps_per_day",
            "steps_per_day x step_hours must equal 24");
  require(v, grid.hours_per_price_point > 0 && 24 % std::max(grid.hours_per_price_point, 1) == 0,
          "time.hours_per_price_point", "must divide 24");
  return v;
}

std::vector<Violation> check_config(const StationConfig& c) {
  std::vector<Violation> v = check_time_grid(c.time);

  require(v, finite(c.grid.import_limit_kw) && c.grid.import_limit_kw >= 0.0, "grid.import_limit_kw", "must be >= 0");
  require(v, finite(c.grid.export_limit_kw) && c.grid.export_limit_kw >= 0.0, "grid.export_limit_kw", "must be >= 0");
  require(v, finite(c.grid.shed_price_cents_per_kwh) && c.grid.shed_price_cents_per_kwh >= 0.0,
          "grid.shed_price_cents_per_kwh", "must be >= 0");

  const auto& e = c.ess;
  require(v, finite(e.capacity_kwh) && e.capacity_kwh > 0.0, "ess.capacity_kwh", "must be > 0");
  require(v, finite(e.charge_eff) && e.charge_eff > 0.0 && e.charge_eff <= 1.0, "ess.charge_eff", "must lie in (0, 1]");
  require(v, finite(e.discharge_eff) && e.discharge_eff > 0.0 && e.discharge_eff <= 1.0, "ess.discharge_eff",
          "must lie in (0, 1]");
  require(v, finite(e.power_limit_kw) && e.power_limit_kw >= 0.0, "ess.power_limit_kw", "must be >= 0");
  const bool soc_finite = finite(e.soc_min_pct) && finite(e.soc_max_pct) && finite(e.soc_init_pct);
  require(v, soc_finite && 0.0 <= e.soc_min_pct && e.soc_min_pct < e.soc_max_pct && e.soc_max_pct <= 100.0,
          "ess.soc_min_pct", "require 0 <= soc_min_pct < soc_max_pct <= 100");
  require(v, soc_finite && e.soc_min_pct <= e.soc_init_pct && e.soc_init_pct <= e.soc_max_pct, "ess.soc_init_pct",
          "must lie within [soc_min_pct, soc_max_pct]");

  const auto& f = c.fleet;
  require(v, f.bus_count >= 0, "fleet.bus_count", "must be >= 0");
  require(v, finite(f.battery_kwh) && f.battery_kwh > 0.0, "fleet.battery_kwh", "must be > 0");
  require(v, finite(f.charge_eff) && f.charge_eff > 0.0 && f.charge_eff <= 1.0, "fleet.charge_eff",
          "must lie in (0, 1]");
  require(v, finite(f.charger_limit_kw) && f.charger_limit_kw >= 0.0, "fleet.charger_limit_kw", "must be >= 0");
  require(v, finite(f.fleet_load_min_kw) && f.fleet_load_min_kw >= 0.0, "fleet.fleet_load_min_kw", "must be >= 0");
  require(v, finite(f.fleet_load_max_kw) && f.fleet_load_min_kw <= f.effective_load_max_kw(),
          "fleet.fleet_load_max_kw", "must be >= fleet_load_min_kw");

  require(v, finite(c.pv.area_m2) && c.pv.area_m2 >= 0.0, "pv.area_m2", "must be >= 0");
  require(v, finite(c.pv.efficiency) && c.pv.efficiency >= 0.0 && c.pv.efficiency <= 1.0, "pv.efficiency",
          "must lie in [0, 1]");
  return v;
}

std::vector<Violation> check_schedule(const ParkingSchedule& s, const StationConfig& c) {
  std::vector<Violation> v;
  const int T = c.time.steps_per_day;
  require(v, static_cast<int>(s.buses.size()) == c.fleet.bus_count, "schedule.buses",
          "bus count " + std::to_string(s.buses.size()) + " differs from fleet.bus_count " +
              std::to_string(c.fleet.bus_count));
  for (std::size_t b = 0; b < s.buses.size(); ++b) {
    const auto& bus = s.buses[b];
    std::vector<int> owner(std::max(T, 0), -1);
    for (std::size_t k = 0; k < bus.windows.size(); ++k) {
      const auto& w = bus.windows[k];
      const std::string path = "schedule." + bus.name + ".window[" + std::to_string(k) + "]";
      if (w.arrival_step < 0 || w.arrival_step >= T || w.departure_step < 0 || w.departure_step > T) {
        v.push_back({path, "step range outside the day grid"});
        continue;
      }
      for (int t : w.steps(T)) {
        if (owner[t] >= 0) {
          v.push_back({path, "overlaps window " + std::to_string(owner[t]) + " at step " + std::to_string(t)});
          break;
        }
        owner[t] = static_cast<int>(k);
      }
      if (!w.soc_assigned) {
        v.push_back({path, "arrival/departure SoC not assigned"});
        continue;
      }
      const bool ok = finite(w.arrival_soc_pct) && finite(w.departure_target_soc_pct) && 0.0 <= w.arrival_soc_pct &&
                      w.arrival_soc_pct <= w.departure_target_soc_pct && w.departure_target_soc_pct <= 100.0;
      require(v, ok, path + ".soc", "require 0 <= arrival_soc_pct <= departure_target_soc_pct <= 100");
    }
  }
  return v;
}

std::vector<Violation> check_scenario(const ScenarioInput& s, const TimeGrid& grid) {
  std::vector<Violation> v;
  require(v, s.solar_kw.size() == grid.steps_per_day, "scenario.solar_kw",
          "length " + std::to_string(s.solar_kw.size()) + " != steps_per_day");
  require(v, s.import_price_cents_per_kwh.size() == grid.price_points(), "scenario.import_price_cents_per_kwh",
          "length must equal 24 / hours_per_price_point");
  require(v, s.export_price_cents_per_kwh.size() == grid.price_points(), "scenario.export_price_cents_per_kwh",
          "length must equal 24 / hours_per_price_point");
  require(v, s.solar_kw.allFinite() && (s.solar_kw.array() >= 0.0).all(), "scenario.solar_kw",
          "must be finite and >= 0");
  require(v, s.import_price_cents_per_kwh.allFinite() && s.export_price_cents_per_kwh.allFinite(),
          "scenario.prices", "must be finite");
  return v;
}

StationConfig validate_config(const StationConfig& config) {
  auto v = check_config(config);
  if (!v.empty()) throw ValidationError(std::move(v));
  return config;
}

void validate_schedule(const ParkingSchedule& schedule, const StationConfig& config) {
  auto v = check_schedule(schedule, config);
  if (!v.empty()) throw ValidationError(std::move(v));
}

void validate_scenario(const ScenarioInput& scenario, const TimeGrid& grid) {
  auto v = check_scenario(scenario, grid);
  if (!v.empty()) throw ValidationError(std::move(v));
}

}  // namespace ebcs
