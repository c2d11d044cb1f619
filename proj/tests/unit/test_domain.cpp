#include <algorithm>
#include <random>

#include <doctest.h>

#include "ebcs/domain.hpp"
#include "fixtures.hpp"

using namespace ebcs;

TEST_SUITE("domain") {
  TEST_CASE("default station validates") {
    const StationConfig c;
    CHECK(check_config(c).empty());
    CHECK(c.grid.import_limit_kw == 500.0);
    CHECK(c.grid.export_limit_kw == 100.0);
    CHECK(c.ess.capacity_kwh == 600.0);
    CHECK(c.ess.soc_min_pct == 30.0);
    CHECK(c.ess.soc_max_pct == 90.0);
    CHECK(c.fleet.bus_count == 20);
    CHECK(c.fleet.charger_limit_kw == 60.0);
    CHECK(c.fleet.effective_load_max_kw() == 1200.0);
    CHECK(c.pv.area_m2 == 1000.0);
    CHECK(c.pv.efficiency == 0.15);
  }

  TEST_CASE("equal SoC bounds are rejected with a field path") {
    StationConfig c;
    c.ess.soc_min_pct = c.ess.soc_max_pct = c.ess.soc_init_pct = 50.0;
    try {
      validate_config(c);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      const auto& v = e.violations();
      CHECK(std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.field == "ess.soc_min_pct"; }));
      CHECK(e.code() == ErrorCode::Validation);
    }
  }

  TEST_CASE("every violation is listed at once") {
    StationConfig c;
    c.grid.import_limit_kw = -1.0;
    c.fleet.battery_kwh = 0.0;
    c.pv.efficiency = 2.0;
    CHECK(check_config(c).size() == 3);
  }

  TEST_CASE("empty fleet with empty schedule is a valid station") {
    StationConfig c;
    c.fleet.bus_count = 0;
    CHECK(check_config(c).empty());
    CHECK(check_schedule(ParkingSchedule{}, c).empty());
  }

  TEST_CASE("validation is total on arbitrary finite and non-finite input") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1000.0, 1000.0);
    const double specials[] = {0.0, -0.0, 1e308, -1e308, std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::infinity()};
    for (int i = 0; i < 500; ++i) {
      StationConfig c;
      double* fields[] = {&c.grid.import_limit_kw, &c.grid.export_limit_kw, &c.ess.capacity_kwh, &c.ess.charge_eff,
                          &c.ess.soc_min_pct,      &c.ess.soc_max_pct,      &c.ess.soc_init_pct, &c.fleet.battery_kwh,
                          &c.fleet.fleet_load_max_kw, &c.pv.efficiency,     &c.time.step_hours};
      for (double* f : fields) *f = (i % 7 == 0) ? specials[i % 6] : u(rng);
      c.fleet.bus_count = static_cast<int>(u(rng));
      const auto v = check_config(c);
      bool threw = false;
      try {
        validate_config(c);
      } catch (const ValidationError&) {
        threw = true;
      }
      CHECK(threw == !v.empty());
    }
  }

  TEST_CASE("grid must tile the day") {
    TimeGrid g;
    g.steps_per_day = 95;
    CHECK_FALSE(check_time_grid(g).empty());
    g = TimeGrid{};
    g.hours_per_price_point = 5;
    CHECK_FALSE(check_time_grid(g).empty());
    CHECK(TimeGrid{}.price_points() == 24);
  }

  TEST_CASE("window segments and charging order") {
    const auto plain = test::window(0, 24, 40, 90);
    CHECK_FALSE(plain.wraps());
    const auto seg = plain.segments(96);
    REQUIRE(seg.size() == 1);
    CHECK(seg[0].begin == 0);
    CHECK(seg[0].end == 24);

    const auto night = test::window(84, 12, 40, 90);
    CHECK(night.wraps());
    const auto parts = night.segments(96);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].begin == 84);
    CHECK(parts[0].end == 96);
    CHECK(parts[1].begin == 0);
    CHECK(parts[1].end == 12);
    const auto steps = night.steps(96);
    REQUIRE(steps.size() == 24);
    CHECK(steps.front() == 84);
    CHECK(steps[11] == 95);
    CHECK(steps[12] == 0);
    CHECK(steps.back() == 11);
  }

  TEST_CASE("schedule checks catch overlap, bad SoC and unassigned windows") {
    StationConfig c;
    c.fleet.bus_count = 1;
    ParkingSchedule s;
    s.buses.push_back({"A", {test::window(24, 56, 40, 90), test::window(52, 60, 40, 90)}});
    CHECK_FALSE(check_schedule(s, c).empty());

    s.buses[0].windows = {test::window(0, 24, 85, 80)};
    CHECK_FALSE(check_schedule(s, c).empty());

    s.buses[0].windows = {test::window(0, 24, 40, 90)};
    s.buses[0].windows[0].soc_assigned = false;
    CHECK_FALSE(check_schedule(s, c).empty());

    s.buses[0].windows[0].soc_assigned = true;
    CHECK(check_schedule(s, c).empty());

    c.fleet.bus_count = 2;
    CHECK_FALSE(check_schedule(s, c).empty());
  }

  TEST_CASE("hourly prices broadcast piecewise constant") {
    TimeGrid g;
    Eigen::VectorXd hourly = Eigen::VectorXd::LinSpaced(24, 0.0, 23.0);
    const Eigen::VectorXd steps = broadcast_prices(hourly, g);
    REQUIRE(steps.size() == 96);
    for (int t = 0; t < 96; ++t) CHECK(steps[t] == doctest::Approx(t / 4));

    TimeGrid coarse;
    coarse.steps_per_day = 12;
    coarse.step_hours = 2.0;
    const Eigen::VectorXd two_hour = broadcast_prices(hourly, coarse);
    REQUIRE(two_hour.size() == 12);
    CHECK(two_hour[0] == doctest::Approx(0.5));
    CHECK(two_hour[11] == doctest::Approx(22.5));
  }

  TEST_CASE("scenario shape and sign checks") {
    TimeGrid g;
    ScenarioInput s = test::flat_scenario(96, 1.0, 5.0);
    s.import_price_cents_per_kwh = Eigen::VectorXd::Constant(24, -3.0);
    s.export_price_cents_per_kwh = s.import_price_cents_per_kwh;
    CHECK(check_scenario(s, g).empty());
    s.solar_kw[10] = -0.1;
    CHECK_FALSE(check_scenario(s, g).empty());
    s.solar_kw[10] = 0.0;
    s.import_price_cents_per_kwh.resize(23);
    CHECK_FALSE(check_scenario(s, g).empty());
  }

  TEST_CASE("error codes have stable names") {
    CHECK(to_string(ErrorCode::IncompleteDay) == "INCOMPLETE_DAY");
    CHECK(to_string(ErrorCode::SingularMomentMatrix) == "SINGULAR_MOMENT_MATRIX");
    CHECK(to_string(ErrorCode::MissingArtifact) == "MISSING_ARTIFACT");
  }
}
