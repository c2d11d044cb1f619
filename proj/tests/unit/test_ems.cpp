#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "ebcs/ems.hpp"
#include "ebcs/pipeline.hpp"
#include "fixtures.hpp"

using namespace ebcs;
using namespace ebcs::ems;

namespace {

struct Solved {
  EmsModel model;
  DaySchedule schedule;
};

Solved solve(const ScenarioInput& s, const StationConfig& c, const ParkingSchedule& p, SolveMode mode = SolveMode::Exact) {
  Solved out{build_day_model(s, c, p), {}};
  SolveOptions o;
  o.mode = mode;
  out.schedule = solve_day(out.model, o);
  return out;
}

/// Station with one bus and a one-step window, ESS disabled.
StationConfig single_bus_station() {
  StationConfig c;
  c.fleet.bus_count = 1;
  c.fleet.charge_eff = 1.0;
  c.ess.power_limit_kw = 0.0;
  return c;
}

}  // namespace

TEST_SUITE("ems") {
  TEST_CASE("reference station model size") {
    const StationConfig c;
    const auto schedule = pipeline::reference_schedule(c.time);
    const auto m = build_day_model(test::flat_scenario(96, 0.0, 5.0), c, schedule);
    CHECK(m.problem.num_binaries() == 192);
    int balance = 0;
    for (const auto& row : m.problem.constraints())
      if (row.name.rfind("balance[", 0) == 0) ++balance;
    CHECK(balance == 96);
    CHECK(m.map.balance_row.size() == 96);
  }

  TEST_CASE("empty station costs nothing") {
    StationConfig c;
    c.fleet.bus_count = 0;
    const auto r = solve(test::flat_scenario(96, 0.0, 7.0), c, {});
    REQUIRE(r.schedule.status == milp::SolveStatus::Optimal);
    CHECK(r.schedule.cost_cents == doctest::Approx(0.0).epsilon(1e-9));
    for (const Eigen::VectorXd* v : {&r.schedule.import_kw, &r.schedule.export_kw, &r.schedule.ess_charge_kw,
                                     &r.schedule.ess_discharge_kw, &r.schedule.shed_kw})
      CHECK(v->cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(check_feasibility(r.schedule, test::flat_scenario(96, 0.0, 7.0), c, {}).pass);
  }

  TEST_CASE("ESS cycle row ties first and last step") {
    const StationConfig c;
    const auto m = build_day_model(test::flat_scenario(96, 0.0, 5.0), c, pipeline::reference_schedule(c.time));
    bool cycle = false, initial = false;
    for (const auto& row : m.problem.constraints()) {
      if (row.name == "ess_cycle") {
        cycle = true;
        REQUIRE(row.terms.size() == 2);
        CHECK(row.terms[0].column == m.map.ess_soc_pct[0]);
        CHECK(row.terms[1].column == m.map.ess_soc_pct[95]);
        CHECK(row.relation == milp::Relation::Equal);
        CHECK(row.rhs == 0.0);
      }
      if (row.name == "ess_initial") {
        initial = true;
        REQUIRE(row.terms.size() == 1);
        CHECK(row.terms[0].column == m.map.ess_soc_pct[0]);
        CHECK(row.rhs == c.ess.soc_init_pct);
      }
    }
    CHECK(cycle);
    CHECK(initial);
  }

  TEST_CASE("charger limit leaves a departure shortfall") {
    // 10% of 400 kWh in one 15-minute step; a 60 kW charger delivers 15 kWh = 3.75%.
    const StationConfig c = single_bus_station();
    ParkingSchedule p;
    p.buses.push_back({"A", {test::window(40, 41, 50.0, 60.0)}});
    const double price = 5.0;
    const auto s = test::flat_scenario(96, 0.0, price);
    const auto r = solve(s, c, p);
    REQUIRE(r.schedule.status == milp::SolveStatus::Optimal);
    CHECK(r.schedule.bus_power_kw(0, 40) == doctest::Approx(60.0));
    CHECK(r.schedule.departure_slack_pct[0][0] == doctest::Approx(6.25));
    const double penalty = c.grid.shed_price_cents_per_kwh;
    CHECK(r.schedule.cost_cents == doctest::Approx(price * 15.0 + penalty * 25.0));
    CHECK(r.schedule.cost_dollars() == doctest::Approx(r.schedule.cost_cents / 100.0));
  }

  TEST_CASE("two-step arbitrage is unprofitable under the daily cycle") {
    StationConfig c = test::small_station(2);
    c.fleet.bus_count = 0;
    c.ess.soc_init_pct = c.ess.soc_min_pct;
    ScenarioInput s = test::flat_scenario(2, 0.0, 1.0);
    s.import_price_cents_per_kwh << 1.0, 100.0;
    s.export_price_cents_per_kwh = s.import_price_cents_per_kwh;
    const auto m = build_day_model(s, c, {});
    const auto bb = milp::solve_milp(m.problem);
    const auto bf = milp::brute_force_milp(m.problem);
    REQUIRE(bb.status == milp::SolveStatus::Optimal);
    CHECK(bb.objective == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(bf.objective == doctest::Approx(0.0).epsilon(1e-9));
  }

  TEST_CASE("free power and ample solar never cost money") {
    StationConfig c;
    const auto schedule = pipeline::reference_schedule(c.time);
    const auto s = test::flat_scenario(96, 2000.0, 0.0);
    const auto r = solve(s, c, schedule);
    REQUIRE(r.schedule.status == milp::SolveStatus::Optimal);
    CHECK(r.schedule.cost_cents <= 1e-6);
  }

  TEST_CASE("feasibility checker flags perturbations") {
    const StationConfig c;
    const auto schedule = pipeline::reference_schedule(c.time);
    auto s = test::flat_scenario(96, 0.0, 5.0);
    for (int t = 40; t < 64; ++t) s.solar_kw[t] = 80.0 + t;
    const auto r = solve(s, c, schedule);
    REQUIRE(r.schedule.status == milp::SolveStatus::Optimal);
    const auto ok = check_feasibility(r.schedule, s, c, schedule);
    CHECK(ok.pass);
    CHECK(ok.issues.empty());

    int step = -1;
    for (int t = 0; t < 96 && step < 0; ++t)
      if (r.schedule.grid_mode[t] == 1 && r.schedule.import_kw[t] < c.grid.import_limit_kw - 2.0) step = t;
    REQUIRE(step >= 0);
    DaySchedule bumped = r.schedule;
    bumped.import_kw[step] += 1.0;
    const auto bad = check_feasibility(bumped, s, c, schedule);
    CHECK_FALSE(bad.pass);
    CHECK(bad.count("power_balance") == 1);
    CHECK(bad.max_violation == doctest::Approx(1.0));

    DaySchedule exporting = r.schedule;
    exporting.grid_mode[step] = 1;
    exporting.export_kw[step] = 5.0;
    const auto ex = check_feasibility(exporting, s, c, schedule);
    CHECK(ex.count("export_limit") == 1);
  }

  TEST_CASE("relax-and-repair matches exact on small stations") {
    std::mt19937_64 rng(99);
    int repaired = 0;
    for (int i = 0; i < 40; ++i) {
      const auto inst = test::random_instance(rng, 8, 3);
      const auto exact = solve(inst.scenario, inst.config, inst.schedule);
      const auto fast = solve(inst.scenario, inst.config, inst.schedule, SolveMode::RelaxRepair);
      REQUIRE(exact.schedule.status == milp::SolveStatus::Optimal);
      REQUIRE(fast.schedule.status == milp::SolveStatus::Optimal);
      CHECK(fast.schedule.cost_cents ==
            doctest::Approx(exact.schedule.cost_cents).epsilon(1e-6).scale(1.0));
      CHECK(check_feasibility(fast.schedule, inst.scenario, inst.config, inst.schedule).pass);
      repaired += fast.schedule.repaired ? 1 : 0;
    }
    MESSAGE(repaired << " of 40 repaired without branching");
  }

  TEST_CASE("schedule invariants on random stations") {
    std::mt19937_64 rng(4242);
    for (int i = 0; i < 120; ++i) {
      const auto inst = test::random_instance(rng, 8, 3);
      CAPTURE(i);
      const auto r = solve(inst.scenario, inst.config, inst.schedule);
      REQUIRE(r.schedule.status == milp::SolveStatus::Optimal);
      const auto& d = r.schedule;
      const auto report = check_feasibility(d, inst.scenario, inst.config, inst.schedule);
      CHECK(report.pass);
      for (int t = 0; t < d.steps(); ++t) {
        CHECK(std::min(d.import_kw[t], d.export_kw[t]) <= 1e-6);
        CHECK(std::min(d.ess_charge_kw[t], d.ess_discharge_kw[t]) <= 1e-6);
      }
      CHECK(std::abs(d.ess_soc_pct[0] - d.ess_soc_pct[d.steps() - 1]) <= 1e-6);
      CHECK(std::abs(d.ess_soc_pct[0] - inst.config.ess.soc_init_pct) <= 1e-6);
      CHECK(d.soc_replay_error <= 1e-6);
      CHECK(std::abs(schedule_cost(d, inst.scenario, inst.config) - d.cost_cents) <= 1e-6 * (1.0 + std::abs(d.cost_cents)));
    }
  }

  TEST_CASE("raising import prices never lowers the optimum") {
    std::mt19937_64 rng(8080);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
      const auto inst = test::random_instance(rng, 8, 2);
      ScenarioInput dearer = inst.scenario;
      for (Eigen::Index k = 0; k < dearer.import_price_cents_per_kwh.size(); ++k)
        dearer.import_price_cents_per_kwh[k] += 5.0 * u(rng);
      const auto base = solve(inst.scenario, inst.config, inst.schedule);
      const auto high = solve(dearer, inst.config, inst.schedule);
      REQUIRE(base.schedule.status == milp::SolveStatus::Optimal);
      REQUIRE(high.schedule.status == milp::SolveStatus::Optimal);
      CHECK(high.schedule.cost_cents >= base.schedule.cost_cents - 1e-6 * (1.0 + std::abs(base.schedule.cost_cents)));
    }
  }

  TEST_CASE("window outside the grid") {
    StationConfig c = test::small_station(4);
    c.fleet.bus_count = 1;
    ParkingSchedule p;
    p.buses.push_back({"A", {test::window(2, 9, 40, 90)}});
    CHECK(test::error_code_of([&] { build_day_model(test::flat_scenario(4, 0, 1), c, p); }) ==
          ErrorCode::ScheduleMismatch);
  }

  TEST_CASE("surplus solar without curtailment") {
    StationConfig c = test::small_station(4);
    c.fleet.bus_count = 0;
    c.grid.export_limit_kw = 50.0;
    c.ess.power_limit_kw = 10.0;
    const auto sunny = test::flat_scenario(4, 500.0, 5.0);
    c.allow_pv_curtailment = false;
    const auto stuck = solve(sunny, c, {});
    CHECK(stuck.schedule.status == milp::SolveStatus::Infeasible);
    c.allow_pv_curtailment = true;
    const auto spill = solve(sunny, c, {});
    REQUIRE(spill.schedule.status == milp::SolveStatus::Optimal);
    CHECK(spill.schedule.curtail_kw.minCoeff() >= 440.0 - 1e-6);
  }

  TEST_CASE("schedule CSV and JSON summary") {
    const StationConfig c = single_bus_station();
    ParkingSchedule p;
    p.buses.push_back({"A", {test::window(40, 48, 50.0, 60.0)}});
    const auto s = test::flat_scenario(96, 10.0, 5.0);
    const auto r = solve(s, c, p);
    std::ostringstream csv;
    write_schedule_csv(r.schedule, s, c, p, csv);
    const std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 97);
    CHECK(text.find("import_kw") != std::string::npos);
    const std::string json = schedule_summary_json(r.schedule, p);
    CHECK(json.find("\"status\"") != std::string::npos);
    CHECK(json.find("OPTIMAL") != std::string::npos);
  }
}
