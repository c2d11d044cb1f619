#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ebcs/domain.hpp"
#include "ebcs/ems.hpp"
#include "ebcs/ingest.hpp"
#include "ebcs/pce.hpp"
#include "ebcs/scen.hpp"

namespace ebcs::pipeline {

/// Scalar of a DaySchedule used as the surrogate response.
enum class Response { Cost, ImportEnergy, ExportEnergy, ShedEnergy };

std::string_view to_string(Response r);
/// VALIDATION on an unknown name.
Response parse_response(std::string_view name);
double response_value(const ems::DaySchedule& schedule, Response r);

/// Input vector zeta = [solar_kw per step, import price per price point].
Eigen::VectorXd scenario_features(const ScenarioInput& scenario);
Eigen::MatrixXd feature_matrix(const std::vector<ScenarioInput>& days);
/// Export price equals import price.
ScenarioInput scenario_from_features(const Eigen::VectorXd& features, const TimeGrid& grid, std::string label);
std::vector<ScenarioInput> scenarios_from_batch(const scen::ScenarioBatch& batch, const std::string& prefix,
                                                long first_index = 0);

/// Joins price and solar days on date (price order); dates missing from either side are dropped.
std::vector<ScenarioInput> assemble_days(const ingest::PriceSeries& prices, const ingest::SolarSeries& solar);
Eigen::MatrixXd solar_matrix(const std::vector<ScenarioInput>& days);
Eigen::MatrixXd price_matrix(const std::vector<ScenarioInput>& days);

struct RunOptions {
  int workers = 1;
  ems::SolveOptions solve;
  Response response = Response::Cost;
};

struct DayResult {
  std::string label;
  bool ok = false;
  milp::SolveStatus status = milp::SolveStatus::Infeasible;
  double lambda_cents = 0.0;
  double response = 0.0;
  long nodes = 0;
  std::string error;
  double wall_seconds = 0.0;
};

/// Solves every scenario on a bounded pool; results are in input order and never depend on `workers`.
std::vector<DayResult> solve_all(const std::vector<ScenarioInput>& scenarios, const StationConfig& config,
                                 const ParkingSchedule& schedule, const RunOptions& options,
                                 const std::function<void(std::size_t)>& on_done = {});

using Provenance = std::vector<std::pair<std::string, std::string>>;

struct YearlyRunReport {
  std::vector<DayResult> days;
  /// Over the days that solved; empty when none did.
  std::optional<pce::Stats> stats;
  Response response = Response::Cost;
  Provenance provenance;
  double wall_seconds = 0.0;

  int failed() const;
};

struct TrainingSet {
  std::vector<std::string> labels;
  Eigen::MatrixXd inputs;
  Eigen::VectorXd response;
  int enriched = 0;
};

struct YearRun {
  YearlyRunReport report;
  TrainingSet training;
};

/// One exact solve per day; failed days are reported and left out of the training set.
YearRun run_year(const std::vector<ScenarioInput>& days, const StationConfig& config, const ParkingSchedule& schedule,
                 const RunOptions& options);

/// Appends `count` solved scenarios drawn from `model` to the training set.
void enrich(YearRun& run, const scen::ScenarioModel& model, int count, std::uint64_t seed, const StationConfig& config,
            const ParkingSchedule& schedule, const RunOptions& options);

/// VALIDATION when rows < 2 or rows < 2 x max_terms.
pce::PceModel fit_surrogate(const TrainingSet& training, const pce::FitOptions& options);

struct SurrogateEvaluation {
  std::uint64_t seed = 0;
  Eigen::VectorXd lambda;
  pce::Stats stats;
  double seconds = 0.0;
};

/// Draws `count` validation scenarios and evaluates the surrogate on them.
SurrogateEvaluation evaluate_surrogate(const pce::PceModel& model, const scen::ScenarioModel& scenarios, int count,
                                       std::uint64_t seed);

struct McResult {
  std::vector<DayResult> results;
  std::optional<pce::Stats> stats;
  /// Sum of per-scenario solve times.
  double solve_seconds = 0.0;
};

McResult mc_benchmark(const std::vector<ScenarioInput>& scenarios, const StationConfig& config,
                      const ParkingSchedule& schedule, const RunOptions& options);

struct BenchmarkReport {
  std::uint64_t seed = 0;
  int training_rows = 0;
  int validation_samples = 0;
  int mc_samples = 0;
  /// Indices into the validation draw where the exact solve succeeded.
  std::vector<long> shared;
  Eigen::VectorXd surrogate_lambda;
  Eigen::VectorXd mc_lambda;
  pce::Stats surrogate_full;
  pce::Stats surrogate_shared;
  pce::Stats mc;
  double normalized_error_pct = 0.0;
  double surrogate_seconds_per_scenario = 0.0;
  double mc_seconds_per_scenario = 0.0;
  double speedup = 0.0;
  Provenance provenance;
};

/// Surrogate over `validation` draws against exact solves of the first `mc_count` of the same draws.
BenchmarkReport benchmark(const pce::PceModel& model, const scen::ScenarioModel& scenarios, int validation,
                          int mc_count, std::uint64_t seed, const StationConfig& config,
                          const ParkingSchedule& schedule, const RunOptions& options);

double normalized_error_pct(double surrogate_mean, double mc_mean);

// Reports. Every JSON report keeps wall-clock values under a top-level "timing" key.

void write_year_reports(const YearlyRunReport& report, const std::filesystem::path& dir);
void write_training_csv(const TrainingSet& training, std::ostream& out);
TrainingSet read_training_csv(std::istream& in);
std::string fit_summary_json(const pce::PceModel& model, const pce::FitOptions& options, Response response);
void write_evaluation_reports(const SurrogateEvaluation& eval, const std::filesystem::path& dir);
void write_benchmark_reports(const BenchmarkReport& report, const std::filesystem::path& dir);
void write_stats_histogram_csv(const pce::Stats& stats, std::ostream& out);

struct Reports {
  std::optional<YearlyRunReport> year;
  std::optional<BenchmarkReport> benchmark;
  Provenance provenance;
};

/// Writes whatever reports are present plus manifest.json listing them.
std::vector<std::string> emit_reports(const Reports& reports, const std::filesystem::path& dir);
void write_manifest(const std::filesystem::path& dir, const std::string& command, const Provenance& provenance,
                    const std::vector<std::string>& files);

std::string hash_hex(std::uint64_t h);
std::string file_hash(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);
/// Drops the top-level "timing" member, for determinism comparisons.
std::string strip_timing(const std::string& json_text);

// Synthetic data.

struct SyntheticOptions {
  int days = 365;
  int year = 2023;
  std::uint64_t seed = 2023;
};

struct SyntheticYear {
  ingest::RawPriceTable prices;
  ingest::RawSolarTable solar;
};

/// Smooth seasonal clear-sky irradiance with persistent cloudiness, and a noisy two-peak price curve.
SyntheticYear synthetic_year(const SyntheticOptions& options, const TimeGrid& grid = {});
std::string date_label(int year, int day_of_year);

/// The bundled 20-bus, two-windows-per-bus parking schedule.
ParkingSchedule reference_schedule(const TimeGrid& grid = {});

}  // namespace ebcs::pipeline
