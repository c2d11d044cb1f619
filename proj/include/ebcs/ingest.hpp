#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ebcs/domain.hpp"

namespace ebcs::ingest {

struct PriceRow {
  std::string date;
  int hour = 0;
  double dollars_per_mwh = 0.0;
};

/// Rows exactly as read: (date, hour 0-23, pool price in $/MWh).
struct RawPriceTable {
  std::vector<PriceRow> rows;
};

struct SolarRow {
  std::string date;
  int step = 0;
  double ghi_w_per_m2 = 0.0;
};

struct RawSolarTable {
  std::vector<SolarRow> rows;
};

struct DaySeries {
  std::string date;
  Eigen::VectorXd values;
};

struct LoadOptions {
  /// When false an incomplete day throws INCOMPLETE_DAY; when true it is skipped and listed.
  bool skip_incomplete_days = false;
};

struct PriceSeries {
  /// cents/kWh, one entry per price point.
  std::vector<DaySeries> days;
  std::vector<std::string> rejected_days;
};

struct SolarSeries {
  /// kW, one entry per step.
  std::vector<DaySeries> days;
  std::vector<std::string> rejected_days;
  long clamped_values = 0;
};

RawPriceTable read_price_table(std::istream& in);
RawSolarTable read_solar_table(std::istream& in);
void write_price_table(const RawPriceTable& table, std::ostream& out);
void write_solar_table(const RawSolarTable& table, std::ostream& out);

/// $/MWh -> cents/kWh (divide by 10); hourly values averaged onto price points.
PriceSeries convert_prices(const RawPriceTable& table, const TimeGrid& grid, const LoadOptions& options = {});
/// kW = GHI x area x efficiency / 1000; negative irradiance clamps to zero.
SolarSeries convert_solar(const RawSolarTable& table, double area_m2, double efficiency, const TimeGrid& grid,
                          const LoadOptions& options = {});

PriceSeries load_prices(const std::filesystem::path& path, const TimeGrid& grid, const LoadOptions& options = {});
SolarSeries load_solar(const std::filesystem::path& path, double area_m2, double efficiency, const TimeGrid& grid,
                       const LoadOptions& options = {});

/// Inverse conversions, used to write generated scenarios in the ingest layout.
RawPriceTable prices_to_table(const std::vector<DaySeries>& days, const TimeGrid& grid);
RawSolarTable solar_to_table(const std::vector<DaySeries>& days, double area_m2, double efficiency);

/// "HH:MM" -> step index; "24:00" is accepted as the end of the day.
int clock_to_step(std::string_view clock, const TimeGrid& grid);

ParkingSchedule read_schedule_csv(std::istream& in, const TimeGrid& grid);
ParkingSchedule read_schedule_json(std::istream& in, const TimeGrid& grid);
/// Dispatches on extension (.json or CSV otherwise).
ParkingSchedule load_schedule(const std::filesystem::path& path, const TimeGrid& grid);
void write_schedule_table(const ParkingSchedule& schedule, const TimeGrid& grid, std::ostream& out);

struct SocRecord {
  std::string bus;
  /// 1-based index into the bus's ordered windows.
  int window = 1;
  double arrival_soc_pct = 0.0;
  double departure_soc_pct = 0.0;
};

struct SocRecordSet {
  std::vector<SocRecord> records;
};

struct SocDefaults {
  double arrival_soc_pct = 0.0;
  double departure_soc_pct = 0.0;
};

struct PairedSchedule {
  ParkingSchedule schedule;
  int fallback_count = 0;
};

SocRecordSet read_soc_records(std::istream& in);
SocRecordSet load_soc_records(const std::filesystem::path& path);

/// Annotates every window with its SoC pair; unmatched windows use `defaults` or fail with MISSING_RECORD.
PairedSchedule pair_soc_records(const SocRecordSet& records, const ParkingSchedule& schedule,
                                const std::optional<SocDefaults>& defaults = std::nullopt);

/// Station JSON document: a StationConfig plus optional SoC defaults for unmatched windows.
struct StationFile {
  std::string name;
  StationConfig config;
  std::optional<SocDefaults> soc_defaults;
};

/// Missing keys keep their defaults; unknown keys are PARSE errors; the config is validated.
StationFile read_station_file(std::istream& in);
StationFile load_station_file(const std::filesystem::path& path);
std::string station_file_json(const StationFile& file);

}  // namespace ebcs::ingest
