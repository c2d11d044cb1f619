#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <string>

#include "ebcs/domain.hpp"
#include "ebcs/error.hpp"

namespace ebcs::test {

/// Runs `f` and returns the ErrorCode it throws; empty when nothing is thrown.
template <typename F>
std::optional<ErrorCode> error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

/// A day split into `steps` equal steps with one price point per step.
inline StationConfig small_station(int steps) {
  StationConfig c;
  c.time.steps_per_day = steps;
  c.time.step_hours = 24.0 / steps;
  c.time.hours_per_price_point = 24 / steps;
  return c;
}

/// Prices are per price point: one per step up to hourly resolution.
inline ScenarioInput flat_scenario(int steps, double solar_kw, double price) {
  ScenarioInput s;
  s.label = "flat";
  s.solar_kw = Eigen::VectorXd::Constant(steps, solar_kw);
  s.import_price_cents_per_kwh = Eigen::VectorXd::Constant(std::min(steps, 24), price);
  s.export_price_cents_per_kwh = s.import_price_cents_per_kwh;
  return s;
}

inline ParkingWindow window(int arrival, int departure, double soc_in, double soc_out) {
  ParkingWindow w;
  w.arrival_step = arrival;
  w.departure_step = departure;
  w.arrival_soc_pct = soc_in;
  w.departure_target_soc_pct = soc_out;
  w.soc_assigned = true;
  return w;
}

struct RandomInstance {
  StationConfig config;
  ScenarioInput scenario;
  ParkingSchedule schedule;
};

/// Small station with random limits, prices, solar and 0..max_buses buses with one window each.
inline RandomInstance random_instance(std::mt19937_64& rng, int steps, int max_buses) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomInstance r;
  auto& c = r.config;
  c = small_station(steps);
  c.grid.import_limit_kw = 40.0 + 160.0 * u(rng);
  c.grid.export_limit_kw = 10.0 + 60.0 * u(rng);
  c.grid.shed_price_cents_per_kwh = 50.0 + 100.0 * u(rng);
  c.ess.capacity_kwh = 50.0 + 200.0 * u(rng);
  c.ess.charge_eff = 0.85 + 0.15 * u(rng);
  c.ess.discharge_eff = 0.85 + 0.15 * u(rng);
  c.ess.power_limit_kw = 10.0 + 60.0 * u(rng);
  c.ess.soc_min_pct = 10.0 + 20.0 * u(rng);
  c.ess.soc_max_pct = 70.0 + 30.0 * u(rng);
  c.ess.soc_init_pct = c.ess.soc_min_pct + (c.ess.soc_max_pct - c.ess.soc_min_pct) * u(rng);
  c.fleet.battery_kwh = 100.0 + 300.0 * u(rng);
  c.fleet.charge_eff = 0.85 + 0.15 * u(rng);
  c.fleet.charger_limit_kw = 20.0 + 60.0 * u(rng);
  c.allow_pv_curtailment = u(rng) < 0.7;

  auto& s = r.scenario;
  s.label = "random";
  s.solar_kw.resize(steps);
  s.import_price_cents_per_kwh.resize(steps);
  for (int t = 0; t < steps; ++t) {
    s.solar_kw[t] = u(rng) < 0.4 ? 0.0 : 120.0 * u(rng);
    s.import_price_cents_per_kwh[t] = -2.0 + 30.0 * u(rng);
  }
  // Without curtailment the export limit must absorb all solar, or the day can be infeasible.
  if (!c.allow_pv_curtailment) s.solar_kw = s.solar_kw.cwiseMin(c.grid.export_limit_kw);
  s.export_price_cents_per_kwh = s.import_price_cents_per_kwh;
  if (u(rng) < 0.3)
    for (int t = 0; t < steps; ++t) s.export_price_cents_per_kwh[t] = s.import_price_cents_per_kwh[t] * (0.5 + 0.5 * u(rng));

  const int buses = std::uniform_int_distribution<int>(0, max_buses)(rng);
  c.fleet.bus_count = buses;
  for (int b = 0; b < buses; ++b) {
    const int a = std::uniform_int_distribution<int>(0, steps - 1)(rng);
    int d = std::uniform_int_distribution<int>(0, steps - 1)(rng);
    if (d == a) d = (a + 1) % steps;
    const double in = 20.0 + 40.0 * u(rng);
    const double out = std::min(100.0, in + 50.0 * u(rng));
    r.schedule.buses.push_back({"B" + std::to_string(b), {window(a, d, in, out)}});
  }
  return r;
}

}  // namespace ebcs::test
