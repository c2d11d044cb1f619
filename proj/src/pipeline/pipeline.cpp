#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "ebcs/pipeline.hpp"

namespace ebcs::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr std::uint64_t kEnrichSalt = 0x656e72696368ULL;

}  // namespace

std::string_view to_string(Response r) {
  switch (r) {
    case Response::Cost: return "cost_cents";
    case Response::ImportEnergy: return "import_kwh";
    case Response::ExportEnergy: return "export_kwh";
    case Response::ShedEnergy: return "shed_kwh";
  }
  return "unknown";
}

Response parse_response(std::string_view name) {
  for (Response r : {Response::Cost, Response::ImportEnergy, Response::ExportEnergy, Response::ShedEnergy})
    if (to_string(r) == name) return r;
  throw Error(ErrorCode::Validation, "unknown response '" + std::string(name) +
                                         "' (expected cost_cents, import_kwh, export_kwh or shed_kwh)");
}

double response_value(const ems::DaySchedule& s, Response r) {
  switch (r) {
    case Response::Cost: return s.cost_cents;
    case Response::ImportEnergy: return s.import_kw.sum() * s.step_hours;
    case Response::ExportEnergy: return s.export_kw.sum() * s.step_hours;
    case Response::ShedEnergy: return s.shed_kw.sum() * s.step_hours;
  }
  return s.cost_cents;
}

Eigen::VectorXd scenario_features(const ScenarioInput& s) {
  Eigen::VectorXd f(s.solar_kw.size() + s.import_price_cents_per_kwh.size());
  f << s.solar_kw, s.import_price_cents_per_kwh;
  return f;
}

Eigen::MatrixXd feature_matrix(const std::vector<ScenarioInput>& days) {
  if (days.empty()) return {};
  Eigen::MatrixXd m(days.size(), scenario_features(days.front()).size());
  for (std::size_t i = 0; i < days.size(); ++i) {
    const Eigen::VectorXd f = scenario_features(days[i]);
    if (f.size() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "scenarios differ in length");
    m.row(i) = f.transpose();
  }
  return m;
}

ScenarioInput scenario_from_features(const Eigen::VectorXd& f, const TimeGrid& grid, std::string label) {
  const int steps = grid.steps_per_day;
  const int points = grid.price_points();
  if (f.size() != steps + points)
    throw Error(ErrorCode::DimensionMismatch, "feature vector has " + std::to_string(f.size()) + " entries, expected " +
                                                  std::to_string(steps + points));
  ScenarioInput s;
  s.label = std::move(label);
  s.solar_kw = f.head(steps);
  s.import_price_cents_per_kwh = f.tail(points);
  s.export_price_cents_per_kwh = s.import_price_cents_per_kwh;
  return s;
}

std::vector<ScenarioInput> scenarios_from_batch(const scen::ScenarioBatch& batch, const std::string& prefix,
                                                long first_index) {
  std::vector<ScenarioInput> out;
  out.reserve(batch.solar_kw.rows());
  for (Eigen::Index i = 0; i < batch.solar_kw.rows(); ++i) {
    ScenarioInput s;
    s.label = prefix + std::to_string(first_index + i);
    s.solar_kw = batch.solar_kw.row(i).transpose();
    s.import_price_cents_per_kwh = batch.price_cents_per_kwh.row(i).transpose();
    s.export_price_cents_per_kwh = s.import_price_cents_per_kwh;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScenarioInput> assemble_days(const ingest::PriceSeries& prices, const ingest::SolarSeries& solar) {
  std::unordered_map<std::string, const ingest::DaySeries*> by_date;
  for (const auto& d : solar.days) by_date.emplace(d.date, &d);
  std::vector<ScenarioInput> out;
  for (const auto& p : prices.days) {
    auto it = by_date.find(p.date);
    if (it == by_date.end()) continue;
    out.push_back({p.date, it->second->values, p.values, p.values});
  }
  if (out.empty()) throw Error(ErrorCode::Empty, "price and solar files share no complete day");
  return out;
}

Eigen::MatrixXd solar_matrix(const std::vector<ScenarioInput>& days) {
  if (days.empty()) return {};
  Eigen::MatrixXd m(days.size(), days.front().solar_kw.size());
  for (std::size_t i = 0; i < days.size(); ++i) m.row(i) = days[i].solar_kw.transpose();
  return m;
}

Eigen::MatrixXd price_matrix(const std::vector<ScenarioInput>& days) {
  if (days.empty()) return {};
  Eigen::MatrixXd m(days.size(), days.front().import_price_cents_per_kwh.size());
  for (std::size_t i = 0; i < days.size(); ++i) m.row(i) = days[i].import_price_cents_per_kwh.transpose();
  return m;
}

std::vector<DayResult> solve_all(const std::vector<ScenarioInput>& scenarios, const StationConfig& config,
                                 const ParkingSchedule& schedule, const RunOptions& options,
                                 const std::function<void(std::size_t)>& on_done) {
  std::vector<DayResult> results(scenarios.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress;
  auto work = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      DayResult& r = results[i];
      r.label = scenarios[i].label;
      const auto start = Clock::now();
      try {
        const ems::EmsModel model = ems::build_day_model(scenarios[i], config, schedule);
        const ems::DaySchedule s = ems::solve_day(model, options.solve);
        r.status = s.status;
        r.nodes = s.nodes;
        if (s.status == milp::SolveStatus::Optimal) {
          r.ok = true;
          r.lambda_cents = s.cost_cents;
          r.response = response_value(s, options.response);
        } else {
          r.error = "solver stopped with status " + std::string(milp::to_string(s.status));
        }
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      r.wall_seconds = seconds_since(start);
      if (on_done) {
        std::lock_guard lock(progress);
        on_done(i);
      }
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(scenarios.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return results;
}

int YearlyRunReport::failed() const {
  int n = 0;
  for (const auto& d : days) n += d.ok ? 0 : 1;
  return n;
}

namespace {

std::optional<pce::Stats> stats_of_ok(const std::vector<DayResult>& results, bool use_response) {
  std::vector<double> v;
  for (const auto& r : results)
    if (r.ok) v.push_back(use_response ? r.response : r.lambda_cents);
  if (v.empty()) return std::nullopt;
  return pce::surrogate_stats(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

void append_training(TrainingSet& t, const std::vector<ScenarioInput>& scenarios, const std::vector<DayResult>& results) {
  long ok = 0;
  for (const auto& r : results) ok += r.ok ? 1 : 0;
  if (ok == 0) return;
  const Eigen::Index width = scenario_features(scenarios.front()).size();
  if (t.inputs.size() == 0) t.inputs.resize(0, width);
  const Eigen::Index base = t.inputs.rows();
  t.inputs.conservativeResize(base + ok, width);
  t.response.conservativeResize(base + ok);
  Eigen::Index row = base;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].ok) continue;
    t.inputs.row(row) = scenario_features(scenarios[i]).transpose();
    t.response[row] = results[i].response;
    t.labels.push_back(results[i].label);
    ++row;
  }
}

}  // namespace

YearRun run_year(const std::vector<ScenarioInput>& days, const StationConfig& config, const ParkingSchedule& schedule,
                 const RunOptions& options) {
  YearRun run;
  const auto start = Clock::now();
  for (const auto& d : days) validate_scenario(d, config.time);
  run.report.days = solve_all(days, config, schedule, options);
  run.report.response = options.response;
  run.report.stats = stats_of_ok(run.report.days, false);
  run.report.wall_seconds = seconds_since(start);
  append_training(run.training, days, run.report.days);
  return run;
}

void enrich(YearRun& run, const scen::ScenarioModel& model, int count, std::uint64_t seed, const StationConfig& config,
            const ParkingSchedule& schedule, const RunOptions& options) {
  if (count <= 0) return;
  const scen::ScenarioBatch batch = scen::generate_scenarios(model, count, seed ^ kEnrichSalt);
  const auto scenarios = scenarios_from_batch(batch, "enrich-");
  const auto results = solve_all(scenarios, config, schedule, options);
  const Eigen::Index before = run.training.inputs.rows();
  append_training(run.training, scenarios, results);
  run.training.enriched += static_cast<int>(run.training.inputs.rows() - before);
}

pce::PceModel fit_surrogate(const TrainingSet& training, const pce::FitOptions& options) {
  const Eigen::Index rows = training.inputs.rows();
  if (rows < 2) throw Error(ErrorCode::Validation, "surrogate fitting needs at least 2 training rows");
  if (options.omp.max_terms > 0 && rows < 2 * options.omp.max_terms)
    throw Error(ErrorCode::Validation, std::to_string(rows) + " training rows cannot support " +
                                           std::to_string(options.omp.max_terms) + " terms (need twice as many rows)");
  return pce::fit_pce(training.inputs, training.response, options);
}

SurrogateEvaluation evaluate_surrogate(const pce::PceModel& model, const scen::ScenarioModel& scenarios, int count,
                                       std::uint64_t seed) {
  if (count < 1) throw Error(ErrorCode::Validation, "evaluation needs at least one sample");
  const scen::ScenarioBatch batch = scen::generate_scenarios(scenarios, count, seed);
  Eigen::MatrixXd zeta(count, batch.solar_kw.cols() + batch.price_cents_per_kwh.cols());
  zeta << batch.solar_kw, batch.price_cents_per_kwh;
  SurrogateEvaluation out;
  out.seed = seed;
  const auto start = Clock::now();
  out.lambda = pce::surrogate_eval(model, zeta);
  out.seconds = seconds_since(start);
  out.stats = pce::surrogate_stats(out.lambda);
  return out;
}

McResult mc_benchmark(const std::vector<ScenarioInput>& scenarios, const StationConfig& config,
                      const ParkingSchedule& schedule, const RunOptions& options) {
  McResult out;
  out.results = solve_all(scenarios, config, schedule, options);
  for (const auto& r : out.results) out.solve_seconds += r.wall_seconds;
  out.stats = stats_of_ok(out.results, true);
  return out;
}

double normalized_error_pct(double surrogate_mean, double mc_mean) {
  return (surrogate_mean - mc_mean) / std::abs(mc_mean) * 100.0;
}

BenchmarkReport benchmark(const pce::PceModel& model, const scen::ScenarioModel& scenarios, int validation,
                          int mc_count, std::uint64_t seed, const StationConfig& config,
                          const ParkingSchedule& schedule, const RunOptions& options) {
  if (mc_count < 1 || mc_count > validation)
    throw Error(ErrorCode::Validation, "MC sample count must lie in [1, validation samples]");
  BenchmarkReport rep;
  rep.seed = seed;
  rep.training_rows = model.diagnostics.training_rows;
  rep.validation_samples = validation;

  const SurrogateEvaluation eval = evaluate_surrogate(model, scenarios, validation, seed);
  rep.surrogate_full = eval.stats;
  rep.surrogate_seconds_per_scenario = eval.seconds / validation;

  const scen::ScenarioBatch batch = scen::generate_scenarios(scenarios, mc_count, seed);
  const McResult mc = mc_benchmark(scenarios_from_batch(batch, "val-"), config, schedule, options);
  std::vector<double> sur, exact;
  for (std::size_t i = 0; i < mc.results.size(); ++i) {
    if (!mc.results[i].ok) continue;
    rep.shared.push_back(static_cast<long>(i));
    sur.push_back(eval.lambda[static_cast<Eigen::Index>(i)]);
    exact.push_back(mc.results[i].response);
  }
  rep.mc_samples = mc_count;
  if (rep.shared.empty()) throw Error(ErrorCode::SolverBug, "no MC scenario solved");
  rep.surrogate_lambda = Eigen::Map<Eigen::VectorXd>(sur.data(), static_cast<Eigen::Index>(sur.size()));
  rep.mc_lambda = Eigen::Map<Eigen::VectorXd>(exact.data(), static_cast<Eigen::Index>(exact.size()));
  rep.surrogate_shared = pce::surrogate_stats(rep.surrogate_lambda);
  rep.mc = pce::surrogate_stats(rep.mc_lambda);
  rep.normalized_error_pct = normalized_error_pct(rep.surrogate_shared.mean, rep.mc.mean);
  rep.mc_seconds_per_scenario = mc.solve_seconds / mc_count;
  rep.speedup = rep.surrogate_seconds_per_scenario > 0.0
                    ? rep.mc_seconds_per_scenario / rep.surrogate_seconds_per_scenario
                    : std::numeric_limits<double>::infinity();
  return rep;
}

}  // namespace ebcs::pipeline
