#include "ebcs/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ebcs/pipeline.hpp"
#include "util/text.hpp"

namespace ebcs::cli {

namespace fs = std::filesystem;
namespace pl = ebcs::pipeline;

namespace {

struct StationInputs {
  std::string config;
  std::string prices;
  std::string solar;
  std::string schedule;
  std::string soc_records;
  bool skip_incomplete = false;
};

struct Loaded {
  ingest::StationFile station;
  ParkingSchedule schedule;
  int soc_fallbacks = 0;
  std::vector<ScenarioInput> days;
  ingest::PriceSeries prices;
  ingest::SolarSeries solar;
};

void add_station_options(CLI::App* cmd, StationInputs& in, bool with_data) {
  cmd->add_option("--config", in.config, "Station configuration JSON")->required();
  cmd->add_option("--schedule", in.schedule, "Parking schedule (CSV or JSON)")->required();
  cmd->add_option("--soc-records", in.soc_records, "Arrival/departure SoC records CSV (bus,window,arrival_soc_pct,departure_soc_pct)");
  if (with_data) {
    cmd->add_option("--prices", in.prices, "Hourly price CSV (date,hour,price_dollars_per_mwh)")->required();
    cmd->add_option("--solar", in.solar, "Irradiance CSV (date,step,ghi_w_per_m2)")->required();
    cmd->add_flag("--skip-incomplete", in.skip_incomplete, "Drop incomplete days instead of failing");
  }
}

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw Error(ErrorCode::Io, std::string(what) + " file not found: " + path);
}

Loaded load_station(const StationInputs& in, bool with_data) {
  Loaded l;
  require_file(in.config, "config");
  require_file(in.schedule, "schedule");
  l.station = ingest::load_station_file(in.config);
  const auto& grid = l.station.config.time;
  ParkingSchedule parking = ingest::load_schedule(in.schedule, grid);
  ingest::SocRecordSet records;
  if (!in.soc_records.empty()) {
    require_file(in.soc_records, "SoC records");
    records = ingest::load_soc_records(in.soc_records);
  }
  const auto paired = ingest::pair_soc_records(records, parking, l.station.soc_defaults);
  l.schedule = paired.schedule;
  l.soc_fallbacks = paired.fallback_count;
  validate_schedule(l.schedule, l.station.config);
  if (with_data) {
    require_file(in.prices, "price");
    require_file(in.solar, "solar");
    const ingest::LoadOptions opts{in.skip_incomplete};
    l.prices = ingest::load_prices(in.prices, grid, opts);
    l.solar = ingest::load_solar(in.solar, l.station.config.pv.area_m2, l.station.config.pv.efficiency, grid, opts);
    l.days = pl::assemble_days(l.prices, l.solar);
  }
  return l;
}

ems::SolveMode parse_mode(const std::string& mode) {
  if (mode == "exact") return ems::SolveMode::Exact;
  if (mode == "relax-repair") return ems::SolveMode::RelaxRepair;
  throw Error(ErrorCode::Validation, "unknown mode '" + mode + "'");
}

pl::Provenance station_provenance(const StationInputs& in, const Loaded& l, bool with_data) {
  pl::Provenance p;
  p.emplace_back("config_hash", pl::hash_hex(util::fnv1a(ingest::station_file_json(l.station))));
  p.emplace_back("schedule_hash", pl::file_hash(in.schedule));
  if (!in.soc_records.empty()) p.emplace_back("soc_records_hash", pl::file_hash(in.soc_records));
  p.emplace_back("soc_fallbacks", std::to_string(l.soc_fallbacks));
  if (with_data) {
    p.emplace_back("prices_hash", pl::file_hash(in.prices));
    p.emplace_back("solar_hash", pl::file_hash(in.solar));
    p.emplace_back("rejected_price_days", std::to_string(l.prices.rejected_days.size()));
    p.emplace_back("rejected_solar_days", std::to_string(l.solar.rejected_days.size()));
    p.emplace_back("clamped_irradiance_values", std::to_string(l.solar.clamped_values));
  }
  return p;
}

void require_artifact(const fs::path& path, const char* produced_by) {
  if (!fs::exists(path))
    throw Error(ErrorCode::MissingArtifact,
                path.string() + " not found; run `" + produced_by + "` with the same --out first");
}

struct Common {
  std::string out = "out";
  int workers = 1;
  std::uint64_t seed = 7;
  std::string mode = "exact";
};

int cmd_solve_day(const StationInputs& in, const Common& c, const std::string& day) {
  Loaded l = load_station(in, true);
  const ScenarioInput* pick = nullptr;
  for (const auto& d : l.days)
    if (day.empty() || d.label == day) {
      pick = &d;
      break;
    }
  if (!pick) throw Error(ErrorCode::Validation, "day " + day + " is not present in both price and solar files");
  ems::SolveOptions opts;
  opts.mode = parse_mode(c.mode);
  const ems::EmsModel model = ems::build_day_model(*pick, l.station.config, l.schedule);
  const ems::DaySchedule s = ems::solve_day(model, opts);
  const fs::path out(c.out);
  const std::string stem = "schedule_" + pick->label;
  if (s.status == milp::SolveStatus::Optimal || s.steps() > 0) {
    std::ostringstream csv;
    ems::write_schedule_csv(s, *pick, l.station.config, l.schedule, csv);
    pl::write_text_file(out / (stem + ".csv"), csv.str());
    pl::write_text_file(out / (stem + ".json"), ems::schedule_summary_json(s, l.schedule) + "\n");
    pl::write_manifest(out, "solve-day", station_provenance(in, l, true), {stem + ".csv", stem + ".json"});
  }
  std::cout << pick->label << ": status " << milp::to_string(s.status) << ", lambda " << util::format_double(s.cost_cents)
            << " cents (" << util::format_double(s.cost_dollars()) << " dollars)\n";
  if (s.status != milp::SolveStatus::Optimal) return kSolveFailure;
  const auto report = ems::check_feasibility(s, *pick, l.station.config, l.schedule);
  if (!report.pass) {
    std::cerr << "feasibility check failed: " << report.issues.size() << " issue(s), max violation "
              << report.max_violation << "\n";
    return kSolveFailure;
  }
  return kOk;
}

int cmd_run_year(const StationInputs& in, const Common& c, int enrich_count, double delta, const std::string& response) {
  Loaded l = load_station(in, true);
  pl::RunOptions opts;
  opts.workers = c.workers;
  opts.solve.mode = parse_mode(c.mode);
  opts.response = pl::parse_response(response);
  std::cerr << "solving " << l.days.size() << " day(s) with " << c.workers << " worker(s)\n";
  pl::YearRun run = pl::run_year(l.days, l.station.config, l.schedule, opts);
  const scen::ScenarioModel model =
      scen::infer_scenario_model(pl::solar_matrix(l.days), pl::price_matrix(l.days), delta);
  if (enrich_count > 0) {
    std::cerr << "enriching with " << enrich_count << " sampled scenario(s)\n";
    pl::enrich(run, model, enrich_count, c.seed, l.station.config, l.schedule, opts);
  }
  auto prov = station_provenance(in, l, true);
  prov.emplace_back("seed", std::to_string(c.seed));
  prov.emplace_back("mode", c.mode);
  prov.emplace_back("enrich", std::to_string(enrich_count));
  prov.emplace_back("delta", util::format_double(delta));
  run.report.provenance = prov;

  const fs::path out(c.out);
  pl::write_year_reports(run.report, out);
  std::ostringstream training;
  pl::write_training_csv(run.training, training);
  pl::write_text_file(out / "training.csv", training.str());
  pl::write_text_file(out / "scenario_model.json", model.to_json() + "\n");
  pl::write_manifest(out, "run-year", prov,
                  {"year_summary.json", "lambda_per_day.csv", "lambda_hist.csv", "training.csv", "scenario_model.json"});

  const auto& r = run.report;
  std::cout << "days " << r.days.size() << ", solved " << r.days.size() - r.failed() << ", training rows "
            << run.training.inputs.rows() << " (" << run.training.enriched << " enriched)\n";
  if (r.stats)
    std::cout << "lambda mean " << util::format_double(r.stats->mean / 100.0) << " dollars, p5 "
              << util::format_double(r.stats->p5 / 100.0) << ", p95 " << util::format_double(r.stats->p95 / 100.0) << "\n";
  return r.failed() == 0 ? kOk : kSolveFailure;
}

int cmd_fit(const Common& c, std::string training_path, const pce::FitOptions& fit, const std::string& response) {
  const fs::path out(c.out);
  if (training_path.empty()) {
    training_path = (out / "training.csv").string();
    require_artifact(training_path, "run-year");
  } else {
    require_file(training_path, "training");
  }
  std::ifstream in(training_path);
  const pl::TrainingSet training = pl::read_training_csv(in);
  const pce::PceModel model = pl::fit_surrogate(training, fit);
  pl::write_text_file(out / "pce_model.json", model.to_json() + "\n");
  pl::write_text_file(out / "fit_summary.json", pl::fit_summary_json(model, fit, pl::parse_response(response)));
  pl::Provenance prov{{"training_hash", pl::file_hash(training_path)},
                      {"order", std::to_string(fit.order)},
                      {"q", util::format_double(fit.q)},
                      {"max_terms", std::to_string(fit.omp.max_terms)}};
  pl::write_manifest(out, "fit", prov, {"pce_model.json", "fit_summary.json"});
  const auto& d = model.diagnostics;
  std::cout << "fitted " << d.active_size << " of " << d.index_set_size << " terms on " << d.training_rows
            << " rows; relative residual " << util::format_double(d.relative_residual) << ", validation R2 "
            << util::format_double(d.validation_r2) << " (" << d.stop_reason << ")\n";
  return kOk;
}

scen::ScenarioModel load_scenario_model(const fs::path& out, const std::string& override_path, double delta) {
  fs::path path = override_path.empty() ? out / "scenario_model.json" : fs::path(override_path);
  if (override_path.empty()) require_artifact(path, "run-year` or `infer");
  else require_file(path.string(), "scenario model");
  scen::ScenarioModel m = scen::ScenarioModel::from_json(pl::read_text_file(path));
  if (delta >= 0.0) {
    if (delta >= 1.0) throw Error(ErrorCode::Validation, "delta must lie in [0, 1)");
    m.delta = delta;
  }
  return m;
}

pce::PceModel load_pce_model(const fs::path& out, const std::string& override_path) {
  fs::path path = override_path.empty() ? out / "pce_model.json" : fs::path(override_path);
  if (override_path.empty()) require_artifact(path, "fit");
  else require_file(path.string(), "model");
  return pce::PceModel::from_json(pl::read_text_file(path));
}

int cmd_evaluate(const Common& c, int samples, const std::string& model_path, const std::string& scen_path, double delta) {
  const fs::path out(c.out);
  const pce::PceModel model = load_pce_model(out, model_path);
  const scen::ScenarioModel scenarios = load_scenario_model(out, scen_path, delta);
  const pl::SurrogateEvaluation eval = pl::evaluate_surrogate(model, scenarios, samples, c.seed);
  pl::write_evaluation_reports(eval, out);
  pl::write_manifest(out, "evaluate",
                  {{"seed", std::to_string(c.seed)}, {"samples", std::to_string(samples)},
                   {"delta", util::format_double(scenarios.delta)}},
                  {"surrogate_eval.json", "lambda_val.csv", "lambda_val_hist.csv"});
  std::cout << "evaluated " << samples << " scenario(s): mean " << util::format_double(eval.stats.mean) << ", p5 "
            << util::format_double(eval.stats.p5) << ", p95 " << util::format_double(eval.stats.p95) << "\n";
  return kOk;
}

int cmd_benchmark(const StationInputs& in, const Common& c, int samples, int mc_samples, const std::string& model_path,
                  const std::string& scen_path, double delta) {
  const fs::path out(c.out);
  const pce::PceModel model = load_pce_model(out, model_path);
  const scen::ScenarioModel scenarios = load_scenario_model(out, scen_path, delta);
  Loaded l = load_station(in, false);
  pl::RunOptions opts;
  opts.workers = c.workers;
  opts.solve.mode = parse_mode(c.mode);
  std::cerr << "benchmarking " << samples << " surrogate samples against " << mc_samples << " exact solve(s)\n";
  pl::BenchmarkReport rep = pl::benchmark(model, scenarios, samples, mc_samples, c.seed, l.station.config, l.schedule, opts);
  rep.provenance = station_provenance(in, l, false);
  rep.provenance.emplace_back("seed", std::to_string(c.seed));
  rep.provenance.emplace_back("mode", c.mode);
  rep.provenance.emplace_back("delta", util::format_double(scenarios.delta));
  pl::write_benchmark_reports(rep, out);
  pl::write_manifest(out, "benchmark", rep.provenance,
                  {"benchmark.json", "benchmark_pairs.csv", "benchmark_surrogate_hist.csv", "benchmark_mc_hist.csv"});
  std::cout << "normalized mean error " << util::format_double(rep.normalized_error_pct) << " % over "
            << rep.shared.size() << " shared scenario(s); speedup " << util::format_double(rep.speedup) << "x\n";
  return static_cast<int>(rep.shared.size()) == mc_samples ? kOk : kSolveFailure;
}

int cmd_infer(const Common& c, const std::string& config, const std::string& prices, const std::string& solar,
              double delta, bool skip_incomplete) {
  require_file(config, "config");
  require_file(prices, "price");
  require_file(solar, "solar");
  const auto station = ingest::load_station_file(config);
  const auto& grid = station.config.time;
  const ingest::LoadOptions opts{skip_incomplete};
  const auto days = pl::assemble_days(ingest::load_prices(prices, grid, opts),
                                      ingest::load_solar(solar, station.config.pv.area_m2, station.config.pv.efficiency,
                                                         grid, opts));
  const scen::ScenarioModel model = scen::infer_scenario_model(pl::solar_matrix(days), pl::price_matrix(days), delta);
  const fs::path out(c.out);
  pl::write_text_file(out / "scenario_model.json", model.to_json() + "\n");
  pl::write_manifest(out, "infer",
                  {{"prices_hash", pl::file_hash(prices)}, {"solar_hash", pl::file_hash(solar)},
                   {"delta", util::format_double(delta)}},
                  {"scenario_model.json"});
  int frozen = 0;
  for (bool f : model.solar.frozen) frozen += f ? 1 : 0;
  std::cout << "inferred from " << days.size() << " day(s); " << frozen << " of " << model.solar.dims()
            << " solar steps are constant\n";
  return kOk;
}

int cmd_synth(const Common& c, int days, int year, const std::string& config) {
  ingest::StationFile station;
  if (!config.empty()) {
    require_file(config, "config");
    station = ingest::load_station_file(config);
  }
  const auto& grid = station.config.time;
  const pl::SyntheticYear y = pl::synthetic_year({days, year, c.seed}, grid);
  const fs::path out(c.out);
  std::ostringstream prices, solar, schedule;
  ingest::write_price_table(y.prices, prices);
  ingest::write_solar_table(y.solar, solar);
  ingest::write_schedule_table(pl::reference_schedule(grid), grid, schedule);
  pl::write_text_file(out / "prices.csv", prices.str());
  pl::write_text_file(out / "solar.csv", solar.str());
  pl::write_text_file(out / "schedule.csv", schedule.str());
  pl::write_manifest(out, "synth", {{"seed", std::to_string(c.seed)}, {"days", std::to_string(days)}},
                  {"prices.csv", "solar.csv", "schedule.csv"});
  std::cout << "wrote " << days << " synthetic day(s) to " << out.string() << "\n";
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::MissingArtifact: return kMissingArtifact;
    case ErrorCode::SolverBug: return kSolveFailure;
    default: return kConfigError;
  }
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Day-ahead energy management for an electric-bus charging station, with a polynomial-chaos surrogate."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.footer(
      "Exit codes: 0 success, 1 usage error, 2 configuration or input error, 3 solve failure, "
      "4 missing upstream artifact, 5 internal error.");

  Common common;
  StationInputs station;
  auto add_common = [&](CLI::App* cmd, bool workers, bool seed, bool mode) {
    cmd->add_option("--out", common.out, "Output directory")->capture_default_str();
    if (workers) cmd->add_option("--workers", common.workers, "Parallel solver workers")->capture_default_str()->check(CLI::PositiveNumber);
    if (seed) cmd->add_option("--seed", common.seed, "Random seed")->capture_default_str();
    if (mode) cmd->add_option("--mode", common.mode, "MILP mode: exact or relax-repair")->capture_default_str()->check(CLI::IsMember({"exact", "relax-repair"}));
  };

  auto* solve = app.add_subcommand("solve-day", "Solve one day and write its schedule");
  std::string day;
  add_station_options(solve, station, true);
  add_common(solve, false, false, true);
  solve->add_option("--day", day, "Date to solve (default: first complete day)");

  auto* year = app.add_subcommand("run-year", "Solve every day, write yearly reports and the training set");
  int enrich_count = 0;
  double delta = 0.10;
  std::string response = "cost_cents";
  add_station_options(year, station, true);
  add_common(year, true, true, true);
  year->add_option("--enrich", enrich_count, "Extra sampled scenarios solved and appended to the training set")->capture_default_str()->check(CLI::NonNegativeNumber);
  year->add_option("--delta", delta, "Relative price spread for sampled scenarios")->capture_default_str()->check(CLI::Range(0.0, 0.999999));
  year->add_option("--response", response, "Surrogate response: cost_cents, import_kwh, export_kwh, shed_kwh")->capture_default_str();

  auto* fit = app.add_subcommand("fit", "Fit the surrogate on run-year's training set");
  pce::FitOptions fit_opts;
  fit_opts.omp.max_terms = 0;
  std::string training_path;
  add_common(fit, false, false, false);
  fit->add_option("--training", training_path, "Training CSV (default: <out>/training.csv)");
  fit->add_option("--order", fit_opts.order, "Polynomial order H")->capture_default_str()->check(CLI::Range(0, 10));
  fit->add_option("--q", fit_opts.q, "q-norm truncation in (0, 1]")->capture_default_str();
  fit->add_option("--max-terms", fit_opts.omp.max_terms, "Maximum active terms (0: a third of the training rows)")->capture_default_str()->check(CLI::NonNegativeNumber);
  fit->add_option("--target-resid", fit_opts.omp.target_resid, "Relative residual stopping target")->capture_default_str();
  fit->add_option("--val-fraction", fit_opts.omp.val_fraction, "Held-out fraction for the R2 stopping rule")->capture_default_str()->check(CLI::Range(0.0, 0.5));
  fit->add_option("--response", response, "Response name recorded in the summary")->capture_default_str();

  auto* eval = app.add_subcommand("evaluate", "Evaluate the surrogate on sampled scenarios");
  int samples = 10000;
  int mc_samples = 1000;
  double delta_override = -1.0;
  std::string model_path, scen_path;
  add_common(eval, false, true, false);
  eval->add_option("--samples", samples, "Validation samples")->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_option("--model", model_path, "Surrogate JSON (default: <out>/pce_model.json)");
  eval->add_option("--scenarios", scen_path, "Scenario model JSON (default: <out>/scenario_model.json)");
  eval->add_option("--delta", delta_override, "Override the scenario model's price spread");

  auto* bench = app.add_subcommand("benchmark", "Compare the surrogate against exact solves on shared scenarios");
  add_station_options(bench, station, false);
  add_common(bench, true, true, true);
  bench->add_option("--samples", samples, "Surrogate validation samples")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--mc-samples", mc_samples, "Exact solves (the first draws of the same sample)")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--model", model_path, "Surrogate JSON (default: <out>/pce_model.json)");
  bench->add_option("--scenarios", scen_path, "Scenario model JSON (default: <out>/scenario_model.json)");
  bench->add_option("--delta", delta_override, "Override the scenario model's price spread");

  auto* infer = app.add_subcommand("infer", "Fit the solar KDE and price perturbation model");
  add_common(infer, false, false, false);
  infer->add_option("--config", station.config, "Station configuration JSON")->required();
  infer->add_option("--prices", station.prices, "Hourly price CSV")->required();
  infer->add_option("--solar", station.solar, "Irradiance CSV")->required();
  infer->add_option("--delta", delta, "Relative price spread")->capture_default_str()->check(CLI::Range(0.0, 0.999999));
  infer->add_flag("--skip-incomplete", station.skip_incomplete, "Drop incomplete days instead of failing");

  auto* synth = app.add_subcommand("synth", "Write a synthetic year of prices and irradiance plus the reference schedule");
  int synth_days = 365, synth_year = 2023;
  std::string synth_config;
  add_common(synth, false, true, false);
  synth->add_option("--days", synth_days, "Number of days")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--year", synth_year, "Calendar year for the date labels")->capture_default_str();
  synth->add_option("--config", synth_config, "Station configuration JSON (time grid)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*solve) return cmd_solve_day(station, common, day);
    if (*year) return cmd_run_year(station, common, enrich_count, delta, response);
    if (*fit) return cmd_fit(common, training_path, fit_opts, response);
    if (*eval) return cmd_evaluate(common, samples, model_path, scen_path, delta_override);
    if (*bench) return cmd_benchmark(station, common, samples, mc_samples, model_path, scen_path, delta_override);
    if (*infer) return cmd_infer(common, station.config, station.prices, station.solar, delta, station.skip_incomplete);
    if (*synth) return cmd_synth(common, synth_days, synth_year, synth_config);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> copy = args;
  std::vector<char*> argv;
  argv.reserve(copy.size());
  for (auto& a : copy) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace ebcs::cli
