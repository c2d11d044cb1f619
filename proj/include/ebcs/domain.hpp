#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ebcs/error.hpp"

namespace ebcs {

/// Uniform day discretisation. Prices may be coarser than the power steps.
struct TimeGrid {
  double step_hours = 0.25;
  int steps_per_day = 96;
  int hours_per_price_point = 1;

  int price_points() const { return hours_per_price_point > 0 ? 24 / hours_per_price_point : 0; }
};

struct GridConfig {
  double import_limit_kw = 500.0;
  double export_limit_kw = 100.0;
  double shed_price_cents_per_kwh = 100.0;
};

struct EssConfig {
  double capacity_kwh = 600.0;
  double charge_eff = 0.95;
  double discharge_eff = 0.95;
  double power_limit_kw = 120.0;
  double soc_min_pct = 30.0;
  double soc_max_pct = 90.0;
  double soc_init_pct = 55.0;
};

struct FleetConfig {
  int bus_count = 20;
  double battery_kwh = 400.0;
  double charge_eff = 0.95;
  double charger_limit_kw = 60.0;
  double fleet_load_min_kw = 0.0;
  /// Negative means "bus_count x charger_limit_kw".
  double fleet_load_max_kw = -1.0;

  double effective_load_max_kw() const {
    return fleet_load_max_kw >= 0.0 ? fleet_load_max_kw : bus_count * charger_limit_kw;
  }
};

struct PvConfig {
  double area_m2 = 1000.0;
  double efficiency = 0.15;
};

/// Deterministic physics and limits of one charging station.
struct StationConfig {
  TimeGrid time;
  GridConfig grid;
  EssConfig ess;
  FleetConfig fleet;
  PvConfig pv;
  /// Adds a zero-cost spill variable bounded by the available solar power.
  bool allow_pv_curtailment = true;
};

/// Half-open step range [begin, end).
struct StepRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
};

/// One arrival-departure pair. `departure_step` is exclusive; a window whose
/// departure is not after its arrival wraps past midnight into the head of the day.
struct ParkingWindow {
  int arrival_step = 0;
  int departure_step = 0;
  double arrival_soc_pct = 0.0;
  double departure_target_soc_pct = 0.0;
  bool soc_assigned = false;

  bool wraps() const { return departure_step <= arrival_step; }
  std::vector<StepRange> segments(int steps_per_day) const;
  /// Steps in charging order (tail segment first for wrapped windows).
  std::vector<int> steps(int steps_per_day) const;
};

struct BusSchedule {
  std::string name;
  std::vector<ParkingWindow> windows;
};

struct ParkingSchedule {
  std::vector<BusSchedule> buses;

  std::size_t window_count() const;
};

/// One day of uncertain inputs: solar power per step, prices per price point.
struct ScenarioInput {
  std::string label;
  Eigen::VectorXd solar_kw;
  Eigen::VectorXd import_price_cents_per_kwh;
  Eigen::VectorXd export_price_cents_per_kwh;
};

/// Piecewise-constant expansion of price points onto power steps. A step that
/// spans several price points takes their time-weighted mean.
Eigen::VectorXd broadcast_prices(const Eigen::VectorXd& price_points, const TimeGrid& grid);

std::vector<Violation> check_time_grid(const TimeGrid& grid);
std::vector<Violation> check_config(const StationConfig& config);
std::vector<Violation> check_schedule(const ParkingSchedule& schedule, const StationConfig& config);
std::vector<Violation> check_scenario(const ScenarioInput& scenario, const TimeGrid& grid);

/// Returns `config` unchanged when every invariant holds; throws ValidationError listing all violations otherwise.
StationConfig validate_config(const StationConfig& config);
void validate_schedule(const ParkingSchedule& schedule, const StationConfig& config);
void validate_scenario(const ScenarioInput& scenario, const TimeGrid& grid);

}  // namespace ebcs
