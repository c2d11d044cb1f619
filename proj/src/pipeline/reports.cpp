#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ebcs/pipeline.hpp"
#include "util/text.hpp"

namespace ebcs::pipeline {

using Json = nlohmann::ordered_json;
using util::format_double;

namespace {

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(); }

Json stats_json(const pce::Stats& s, bool with_dollars) {
  Json j;
  j["count"] = s.count;
  j["mean"] = s.mean;
  j["std"] = s.std;
  j["min"] = s.min;
  j["max"] = s.max;
  j["p5"] = s.p5;
  j["p95"] = s.p95;
  if (with_dollars) {
    j["mean_dollars"] = s.mean / 100.0;
    j["p5_dollars"] = s.p5 / 100.0;
    j["p95_dollars"] = s.p95 / 100.0;
  }
  j["histogram"] = {{"lower", s.histogram.lower},
                    {"upper", s.histogram.upper},
                    {"bins", s.histogram.counts.size()},
                    {"counts", s.histogram.counts}};
  return j;
}

Json provenance_json(const Provenance& p) {
  Json j = Json::object();
  for (const auto& [k, v] : p) j[k] = v;
  return j;
}

void write_csv(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ostringstream out;
  body(out);
  write_text_file(path, out.str());
}

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hash_hex(std::uint64_t h) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

std::string file_hash(const std::filesystem::path& path) { return hash_hex(util::fnv1a(read_text_file(path))); }

std::string strip_timing(const std::string& json_text) {
  Json j = Json::parse(json_text);
  if (j.is_object()) j.erase("timing");
  return j.dump(2);
}

void write_stats_histogram_csv(const pce::Stats& s, std::ostream& out) {
  out << "bin,lower,upper,count\n";
  const double w = s.histogram.bin_width();
  for (std::size_t b = 0; b < s.histogram.counts.size(); ++b)
    out << b << ',' << format_double(s.histogram.lower + w * b) << ','
        << format_double(b + 1 == s.histogram.counts.size() ? s.histogram.upper : s.histogram.lower + w * (b + 1)) << ','
        << s.histogram.counts[b] << '\n';
}

void write_year_reports(const YearlyRunReport& report, const std::filesystem::path& dir) {
  Json j;
  j["report"] = "year";
  j["response"] = std::string(to_string(report.response));
  j["days"] = report.days.size();
  j["solved"] = report.days.size() - report.failed();
  j["failed"] = report.failed();
  j["lambda_cents"] = report.stats ? stats_json(*report.stats, true) : Json();
  Json failures = Json::array();
  for (const auto& d : report.days)
    if (!d.ok) failures.push_back({{"label", d.label}, {"status", milp::to_string(d.status)}, {"error", d.error}});
  j["failures"] = failures;
  j["provenance"] = provenance_json(report.provenance);
  Json per_day = Json::array();
  double total = 0.0;
  for (const auto& d : report.days) {
    per_day.push_back(d.wall_seconds);
    total += d.wall_seconds;
  }
  j["timing"] = {{"wall_seconds", report.wall_seconds}, {"solve_seconds", total}, {"per_day_seconds", per_day}};
  write_text_file(dir / "year_summary.json", j.dump(2) + "\n");

  write_csv(dir / "lambda_per_day.csv", [&](std::ostream& out) {
    out << "index,label,status,lambda_cents,lambda_dollars,nodes\n";
    for (std::size_t i = 0; i < report.days.size(); ++i) {
      const auto& d = report.days[i];
      out << i << ',' << d.label << ',' << milp::to_string(d.status) << ',';
      if (d.ok) out << format_double(d.lambda_cents) << ',' << format_double(d.lambda_cents / 100.0);
      else out << ',';
      out << ',' << d.nodes << '\n';
    }
  });
  write_csv(dir / "lambda_hist.csv", [&](std::ostream& out) {
    if (report.stats) write_stats_histogram_csv(*report.stats, out);
    else out << "bin,lower,upper,count\n";
  });
}

void write_training_csv(const TrainingSet& t, std::ostream& out) {
  out << "label";
  for (Eigen::Index k = 0; k < t.inputs.cols(); ++k) out << ",x" << k;
  out << ",response\n";
  for (Eigen::Index i = 0; i < t.inputs.rows(); ++i) {
    out << t.labels[i];
    for (Eigen::Index k = 0; k < t.inputs.cols(); ++k) out << ',' << format_double(t.inputs(i, k));
    out << ',' << format_double(t.response[i]) << '\n';
  }
}

TrainingSet read_training_csv(std::istream& in) {
  TrainingSet t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Empty, "training file is empty");
  const auto header = util::split(line);
  if (header.size() < 3 || header.front() != "label" || header.back() != "response")
    throw Error(ErrorCode::Parse, "training header must be label,x0..,response");
  const std::size_t width = header.size() - 2;
  std::vector<double> values;
  long row = 0;
  while (std::getline(in, line)) {
    if (util::trim(line).empty()) continue;
    const auto cells = util::split(line);
    ++row;
    if (cells.size() != header.size())
      throw Error(ErrorCode::Parse, "training row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                        " fields, expected " + std::to_string(header.size()));
    t.labels.emplace_back(cells[0]);
    for (std::size_t k = 1; k < cells.size(); ++k) {
      double v;
      if (!util::parse_double(cells[k], v))
        throw Error(ErrorCode::Parse, "training row " + std::to_string(row) + ": bad number '" + std::string(cells[k]) + "'");
      values.push_back(v);
    }
  }
  const auto rows = static_cast<Eigen::Index>(t.labels.size());
  t.inputs.resize(rows, static_cast<Eigen::Index>(width));
  t.response.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < width; ++k) t.inputs(i, static_cast<Eigen::Index>(k)) = values[i * (width + 1) + k];
    t.response[i] = values[i * (width + 1) + width];
  }
  for (const auto& l : t.labels) t.enriched += l.rfind("enrich-", 0) == 0 ? 1 : 0;
  return t;
}

std::string fit_summary_json(const pce::PceModel& model, const pce::FitOptions& options, Response response) {
  const auto& d = model.diagnostics;
  Json j;
  j["report"] = "fit";
  j["response"] = std::string(to_string(response));
  j["order"] = options.order;
  j["q"] = options.q;
  j["max_terms"] = options.omp.max_terms;
  j["target_resid"] = options.omp.target_resid;
  j["val_fraction"] = options.omp.val_fraction;
  j["training_rows"] = d.training_rows;
  j["input_dims"] = model.input_dims();
  j["retained_dims"] = model.standardization.active_count();
  j["index_set_size"] = d.index_set_size;
  j["active_size"] = d.active_size;
  j["iterations"] = d.iterations;
  j["stop_reason"] = d.stop_reason;
  j["residual_norm"] = d.residual_norm;
  j["relative_residual"] = d.relative_residual;
  j["validation_r2"] = finite_or_null(d.validation_r2);
  j["max_condition_number"] = finite_or_null(d.max_condition_number);
  return j.dump(2) + "\n";
}

void write_evaluation_reports(const SurrogateEvaluation& eval, const std::filesystem::path& dir) {
  Json j;
  j["report"] = "evaluate";
  j["seed"] = eval.seed;
  j["samples"] = eval.lambda.size();
  j["lambda"] = stats_json(eval.stats, true);
  j["timing"] = {{"seconds", eval.seconds},
                 {"seconds_per_scenario", eval.lambda.size() ? eval.seconds / eval.lambda.size() : 0.0}};
  write_text_file(dir / "surrogate_eval.json", j.dump(2) + "\n");
  write_csv(dir / "lambda_val.csv", [&](std::ostream& out) {
    out << "index,lambda\n";
    for (Eigen::Index i = 0; i < eval.lambda.size(); ++i) out << i << ',' << format_double(eval.lambda[i]) << '\n';
  });
  write_csv(dir / "lambda_val_hist.csv", [&](std::ostream& out) { write_stats_histogram_csv(eval.stats, out); });
}

void write_benchmark_reports(const BenchmarkReport& r, const std::filesystem::path& dir) {
  Json j;
  j["report"] = "benchmark";
  j["seed"] = r.seed;
  j["training_rows"] = r.training_rows;
  j["validation_samples"] = r.validation_samples;
  j["mc_samples"] = r.mc_samples;
  j["shared_samples"] = r.shared.size();
  j["mc_failures"] = r.mc_samples - static_cast<long>(r.shared.size());
  j["normalized_error_pct"] = r.normalized_error_pct;
  j["surrogate"] = stats_json(r.surrogate_shared, true);
  j["mc"] = stats_json(r.mc, true);
  j["surrogate_all_samples"] = stats_json(r.surrogate_full, true);
  j["provenance"] = provenance_json(r.provenance);
  j["timing"] = {{"surrogate_seconds_per_scenario", r.surrogate_seconds_per_scenario},
                 {"mc_seconds_per_scenario", r.mc_seconds_per_scenario},
                 {"speedup", finite_or_null(r.speedup)}};
  write_text_file(dir / "benchmark.json", j.dump(2) + "\n");
  write_csv(dir / "benchmark_pairs.csv", [&](std::ostream& out) {
    out << "index,surrogate,mc\n";
    for (std::size_t i = 0; i < r.shared.size(); ++i)
      out << r.shared[i] << ',' << format_double(r.surrogate_lambda[i]) << ',' << format_double(r.mc_lambda[i]) << '\n';
  });
  write_csv(dir / "benchmark_surrogate_hist.csv",
            [&](std::ostream& out) { write_stats_histogram_csv(r.surrogate_shared, out); });
  write_csv(dir / "benchmark_mc_hist.csv", [&](std::ostream& out) { write_stats_histogram_csv(r.mc, out); });
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, const Provenance& provenance,
                    const std::vector<std::string>& files) {
  const auto path = dir / "manifest.json";
  Json j;
  if (std::filesystem::exists(path)) {
    try {
      j = Json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception&) {
      j = Json();
    }
  }
  if (!j.is_object() || !j.contains("commands") || !j["commands"].is_object())
    j = {{"format", "ebcs.manifest"}, {"commands", Json::object()}};
  j["commands"][command] = {{"files", files}, {"provenance", provenance_json(provenance)}};
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<std::string> emit_reports(const Reports& reports, const std::filesystem::path& dir) {
  std::vector<std::string> files;
  if (reports.year) {
    write_year_reports(*reports.year, dir);
    files.insert(files.end(), {"year_summary.json", "lambda_per_day.csv", "lambda_hist.csv"});
  }
  if (reports.benchmark) {
    write_benchmark_reports(*reports.benchmark, dir);
    files.insert(files.end(),
                 {"benchmark.json", "benchmark_pairs.csv", "benchmark_surrogate_hist.csv", "benchmark_mc_hist.csv"});
  }
  write_manifest(dir, "emit", reports.provenance, files);
  return files;
}

}  // namespace ebcs::pipeline
