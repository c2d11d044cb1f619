#include "ebcs/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "util/text.hpp"

namespace ebcs::ingest {

namespace {

using util::format_double;
using util::parse_double;
using util::parse_int;
using util::split;
using util::trim;

/// Header-addressed CSV reader: columns are located by name.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::vector<std::string> required) : in_(in) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw Error(ErrorCode::Empty, "file has no header row");
    const auto names = split(line);
    for (const auto& want : required) {
      auto it = std::find(names.begin(), names.end(), want);
      if (it == names.end()) throw Error(ErrorCode::Parse, "missing column '" + want + "' in header");
      index_.push_back(static_cast<int>(it - names.begin()));
    }
  }

  /// Fills `fields` with the required columns of the next non-empty row.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (trim(line).empty()) continue;
      const auto cells = split(line);
      fields.clear();
      for (int i : index_) {
        if (i >= static_cast<int>(cells.size())) fail("too few columns");
        fields.emplace_back(cells[i]);
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::Parse, "line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  std::vector<int> index_;
  long line_no_ = 0;
};

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

/// Groups rows by date in first-appearance order.
template <typename Row, typename KeyFn>
std::vector<std::pair<std::string, std::vector<const Row*>>> group_by_date(const std::vector<Row>& rows, KeyFn key,
                                                                           int slots, const char* what) {
  std::vector<std::pair<std::string, std::vector<const Row*>>> out;
  std::unordered_map<std::string, std::size_t> where;
  for (const auto& r : rows) {
    auto [it, fresh] = where.emplace(r.date, out.size());
    if (fresh) out.push_back({r.date, std::vector<const Row*>(slots, nullptr)});
    const int k = key(r);
    if (k < 0 || k >= slots)
      throw Error(ErrorCode::Parse, r.date + ": " + what + " index " + std::to_string(k) + " outside [0, " +
                                        std::to_string(slots) + ")");
    auto& slot = out[it->second].second[k];
    if (slot != nullptr) throw Error(ErrorCode::Parse, r.date + ": duplicate " + what + " " + std::to_string(k));
    slot = &r;
  }
  return out;
}

void reject_or_throw(const std::string& date, int present, int expected, const LoadOptions& options,
                     std::vector<std::string>& rejected) {
  if (!options.skip_incomplete_days)
    throw Error(ErrorCode::IncompleteDay,
                date + " has " + std::to_string(present) + " of " + std::to_string(expected) + " rows");
  rejected.push_back(date);
}

}  // namespace

RawPriceTable read_price_table(std::istream& in) {
  CsvReader csv(in, {"date", "hour", "price_dollars_per_mwh"});
  RawPriceTable table;
  std::vector<std::string> f;
  while (csv.next(f)) {
    PriceRow row;
    row.date = f[0];
    if (row.date.empty()) csv.fail("empty date");
    if (!parse_int(f[1], row.hour)) csv.fail("bad hour '" + f[1] + "'");
    if (!parse_double(f[2], row.dollars_per_mwh)) csv.fail("bad price '" + f[2] + "'");
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw Error(ErrorCode::Empty, "price table has no rows");
  return table;
}

RawSolarTable read_solar_table(std::istream& in) {
  CsvReader csv(in, {"date", "step", "ghi_w_per_m2"});
  RawSolarTable table;
  std::vector<std::string> f;
  while (csv.next(f)) {
    SolarRow row;
    row.date = f[0];
    if (row.date.empty()) csv.fail("empty date");
    if (!parse_int(f[1], row.step)) csv.fail("bad step '" + f[1] + "'");
    if (!parse_double(f[2], row.ghi_w_per_m2)) csv.fail("bad irradiance '" + f[2] + "'");
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw Error(ErrorCode::Empty, "solar table has no rows");
  return table;
}

void write_price_table(const RawPriceTable& table, std::ostream& out) {
  out << "date,hour,price_dollars_per_mwh\n";
  for (const auto& r : table.rows) out << r.date << ',' << r.hour << ',' << format_double(r.dollars_per_mwh) << '\n';
}

void write_solar_table(const RawSolarTable& table, std::ostream& out) {
  out << "date,step,ghi_w_per_m2\n";
  for (const auto& r : table.rows) out << r.date << ',' << r.step << ',' << format_double(r.ghi_w_per_m2) << '\n';
}

PriceSeries convert_prices(const RawPriceTable& table, const TimeGrid& grid, const LoadOptions& options) {
  if (table.rows.empty()) throw Error(ErrorCode::Empty, "price table has no rows");
  PriceSeries out;
  const int per_point = grid.hours_per_price_point;
  for (const auto& [date, hours] :
       group_by_date(table.rows, [](const PriceRow& r) { return r.hour; }, 24, "hour")) {
    const int present = static_cast<int>(std::count_if(hours.begin(), hours.end(), [](auto* p) { return p != nullptr; }));
    if (present != 24) {
      reject_or_throw(date, present, 24, options, out.rejected_days);
      continue;
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(grid.price_points());
    for (int h = 0; h < 24; ++h) v[h / per_point] += hours[h]->dollars_per_mwh / 10.0;
    if (per_point > 1) v /= per_point;
    out.days.push_back({date, std::move(v)});
  }
  if (out.days.empty()) throw Error(ErrorCode::Empty, "no complete price days");
  return out;
}

SolarSeries convert_solar(const RawSolarTable& table, double area_m2, double efficiency, const TimeGrid& grid,
                          const LoadOptions& options) {
  if (table.rows.empty()) throw Error(ErrorCode::Empty, "solar table has no rows");
  SolarSeries out;
  const int T = grid.steps_per_day;
  for (const auto& [date, steps] :
       group_by_date(table.rows, [](const SolarRow& r) { return r.step; }, T, "step")) {
    const int present = static_cast<int>(std::count_if(steps.begin(), steps.end(), [](auto* p) { return p != nullptr; }));
    if (present != T) {
      reject_or_throw(date, present, T, options, out.rejected_days);
      continue;
    }
    Eigen::VectorXd v(T);
    for (int t = 0; t < T; ++t) {
      double ghi = steps[t]->ghi_w_per_m2;
      if (ghi < 0.0) {
        ghi = 0.0;
        ++out.clamped_values;
      }
      v[t] = ghi * area_m2 * efficiency / 1000.0;
    }
    out.days.push_back({date, std::move(v)});
  }
  if (out.days.empty()) throw Error(ErrorCode::Empty, "no complete solar days");
  return out;
}

PriceSeries load_prices(const std::filesystem::path& path, const TimeGrid& grid, const LoadOptions& options) {
  auto in = open(path);
  return convert_prices(read_price_table(in), grid, options);
}

SolarSeries load_solar(const std::filesystem::path& path, double area_m2, double efficiency, const TimeGrid& grid,
                       const LoadOptions& options) {
  auto in = open(path);
  return convert_solar(read_solar_table(in), area_m2, efficiency, grid, options);
}

RawPriceTable prices_to_table(const std::vector<DaySeries>& days, const TimeGrid& grid) {
  RawPriceTable table;
  for (const auto& d : days)
    for (int h = 0; h < 24; ++h) table.rows.push_back({d.date, h, d.values[h / grid.hours_per_price_point] * 10.0});
  return table;
}

RawSolarTable solar_to_table(const std::vector<DaySeries>& days, double area_m2, double efficiency) {
  RawSolarTable table;
  const double scale = area_m2 * efficiency;
  for (const auto& d : days)
    for (Eigen::Index t = 0; t < d.values.size(); ++t)
      table.rows.push_back({d.date, static_cast<int>(t), scale > 0.0 ? d.values[t] * 1000.0 / scale : 0.0});
  return table;
}

int clock_to_step(std::string_view clock, const TimeGrid& grid) {
  clock = trim(clock);
  const auto colon = clock.find(':');
  int hh = 0, mm = 0;
  if (colon == std::string_view::npos || !parse_int(clock.substr(0, colon), hh) ||
      !parse_int(clock.substr(colon + 1), mm) || hh < 0 || mm < 0 || mm >= 60 || hh > 24 || (hh == 24 && mm != 0))
    throw Error(ErrorCode::BadTime, "cannot parse clock time '" + std::string(clock) + "'");
  const double steps = (hh + mm / 60.0) / grid.step_hours;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9)
    throw Error(ErrorCode::BadTime, "clock time '" + std::string(clock) + "' is not on the step grid");
  return static_cast<int>(rounded);
}

namespace {

struct ScheduleRow {
  std::string bus, start, end;
  std::optional<double> arrival, departure;
};

ParkingSchedule assemble_schedule(const std::vector<ScheduleRow>& rows, const TimeGrid& grid) {
  ParkingSchedule out;
  std::unordered_map<std::string, std::size_t> where;
  const int T = grid.steps_per_day;
  for (const auto& r : rows) {
    if (r.bus.empty()) throw Error(ErrorCode::Parse, "schedule row without bus name");
    auto [it, fresh] = where.emplace(r.bus, out.buses.size());
    if (fresh) out.buses.push_back({r.bus, {}});
    ParkingWindow w;
    w.arrival_step = clock_to_step(r.start, grid);
    w.departure_step = clock_to_step(r.end, grid);
    if (w.arrival_step == T) w.arrival_step = 0;
    if (w.departure_step == 0 && w.arrival_step > 0) w.departure_step = T;
    if (r.arrival.has_value() != r.departure.has_value())
      throw Error(ErrorCode::Parse, r.bus + ": arrival and departure SoC must be given together");
    if (r.arrival) {
      w.arrival_soc_pct = *r.arrival;
      w.departure_target_soc_pct = *r.departure;
      w.soc_assigned = true;
    }
    auto& bus = out.buses[it->second];
    std::vector<bool> used(T, false);
    for (const auto& prev : bus.windows)
      for (int t : prev.steps(T)) used[t] = true;
    for (int t : w.steps(T))
      if (used[t])
        throw Error(ErrorCode::Overlap, r.bus + ": window " + r.start + "-" + r.end + " intersects an earlier window");
    bus.windows.push_back(w);
  }
  return out;
}

std::optional<double> optional_number(std::string_view s, const char* what) {
  if (trim(s).empty()) return std::nullopt;
  double v;
  if (!parse_double(s, v)) throw Error(ErrorCode::Parse, std::string("bad ") + what + " '" + std::string(s) + "'");
  return v;
}

}  // namespace

ParkingSchedule read_schedule_csv(std::istream& in, const TimeGrid& grid) {
  CsvReader csv(in, {"bus", "start", "end", "arrival_soc_pct", "departure_soc_pct"});
  std::vector<ScheduleRow> rows;
  std::vector<std::string> f;
  while (csv.next(f))
    rows.push_back({f[0], f[1], f[2], optional_number(f[3], "arrival_soc_pct"), optional_number(f[4], "departure_soc_pct")});
  return assemble_schedule(rows, grid);
}

ParkingSchedule read_schedule_json(std::istream& in, const TimeGrid& grid) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  const auto& list = doc.is_object() && doc.contains("windows") ? doc["windows"] : doc;
  if (!list.is_array()) throw Error(ErrorCode::Parse, "schedule JSON must be an array of windows");
  std::vector<ScheduleRow> rows;
  try {
    for (const auto& item : list) {
      ScheduleRow r{item.at("bus").get<std::string>(), item.at("start").get<std::string>(),
                    item.at("end").get<std::string>(), std::nullopt, std::nullopt};
      if (item.contains("arrival_soc_pct") && !item["arrival_soc_pct"].is_null())
        r.arrival = item["arrival_soc_pct"].get<double>();
      if (item.contains("departure_soc_pct") && !item["departure_soc_pct"].is_null())
        r.departure = item["departure_soc_pct"].get<double>();
      rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  return assemble_schedule(rows, grid);
}

ParkingSchedule load_schedule(const std::filesystem::path& path, const TimeGrid& grid) {
  auto in = open(path);
  return path.extension() == ".json" ? read_schedule_json(in, grid) : read_schedule_csv(in, grid);
}

void write_schedule_table(const ParkingSchedule& schedule, const TimeGrid& grid, std::ostream& out) {
  auto clock = [&](int step) {
    const int minutes = static_cast<int>(std::lround(step * grid.step_hours * 60.0));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d:%02d", minutes / 60, minutes % 60);
    return std::string(buf);
  };
  out << "bus,start,end,arrival_soc_pct,departure_soc_pct\n";
  for (const auto& bus : schedule.buses)
    for (const auto& w : bus.windows) {
      out << bus.name << ',' << clock(w.arrival_step) << ',' << clock(w.departure_step) << ',';
      if (w.soc_assigned) out << format_double(w.arrival_soc_pct) << ',' << format_double(w.departure_target_soc_pct);
      else out << ',';
      out << '\n';
    }
}

SocRecordSet read_soc_records(std::istream& in) {
  CsvReader csv(in, {"bus", "window", "arrival_soc_pct", "departure_soc_pct"});
  SocRecordSet set;
  std::vector<std::string> f;
  while (csv.next(f)) {
    SocRecord r;
    r.bus = f[0];
    if (!parse_int(f[1], r.window) || r.window < 1) csv.fail("bad window index '" + f[1] + "'");
    if (!parse_double(f[2], r.arrival_soc_pct) || !parse_double(f[3], r.departure_soc_pct)) csv.fail("bad SoC value");
    set.records.push_back(std::move(r));
  }
  return set;
}

SocRecordSet load_soc_records(const std::filesystem::path& path) {
  auto in = open(path);
  return read_soc_records(in);
}

PairedSchedule pair_soc_records(const SocRecordSet& records, const ParkingSchedule& schedule,
                                const std::optional<SocDefaults>& defaults) {
  PairedSchedule out{schedule, 0};
  std::map<std::pair<std::string, int>, const SocRecord*> lookup;
  std::vector<Violation> violations;
  for (const auto& r : records.records) {
    const std::string path = "soc_records." + r.bus + ".window[" + std::to_string(r.window) + "]";
    if (!(0.0 <= r.arrival_soc_pct && r.arrival_soc_pct <= r.departure_soc_pct && r.departure_soc_pct <= 100.0))
      violations.push_back({path, "require 0 <= arrival <= departure <= 100"});
    if (!lookup.emplace(std::make_pair(r.bus, r.window), &r).second) violations.push_back({path, "duplicate record"});
  }
  std::set<std::pair<std::string, int>> matched;
  for (auto& bus : out.schedule.buses)
    for (std::size_t k = 0; k < bus.windows.size(); ++k) {
      auto& w = bus.windows[k];
      const auto key = std::make_pair(bus.name, static_cast<int>(k) + 1);
      if (auto it = lookup.find(key); it != lookup.end()) {
        w.arrival_soc_pct = it->second->arrival_soc_pct;
        w.departure_target_soc_pct = it->second->departure_soc_pct;
        w.soc_assigned = true;
        matched.insert(key);
      } else if (!w.soc_assigned) {
        if (!defaults)
          throw Error(ErrorCode::MissingRecord,
                      "no SoC record for bus " + bus.name + " window " + std::to_string(k + 1) + " and no default");
        w.arrival_soc_pct = defaults->arrival_soc_pct;
        w.departure_target_soc_pct = defaults->departure_soc_pct;
        w.soc_assigned = true;
        ++out.fallback_count;
      }
    }
  for (const auto& [key, rec] : lookup)
    if (!matched.count(key))
      violations.push_back({"soc_records." + key.first + ".window[" + std::to_string(key.second) + "]",
                            "no matching parking window"});
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return out;
}

namespace {

using Json = nlohmann::ordered_json;

/// Reads known members of `obj` through `fields`; any other key is rejected.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw Error(ErrorCode::Parse, path_ + " must be an object");
  }
  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::Parse, path_ + "." + key + " has the wrong type");
    }
  }
  const Json* child(const char* key) {
    seen_.insert(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }
  void finish() const {
    for (const auto& item : obj_.items())
      if (!seen_.count(item.key())) throw Error(ErrorCode::Parse, "unknown key " + path_ + "." + item.key());
  }

 private:
  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

StationFile read_station_file(std::istream& in) {
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("station config: ") + e.what());
  }
  StationFile file;
  auto& c = file.config;
  ObjectReader root(doc, "config");
  if (const Json* j = root.child("time")) {
    ObjectReader r(*j, "config.time");
    r.get("step_hours", c.time.step_hours);
    r.get("steps_per_day", c.time.steps_per_day);
    r.get("hours_per_price_point", c.time.hours_per_price_point);
    r.finish();
  }
  if (const Json* j = root.child("grid")) {
    ObjectReader r(*j, "config.grid");
    r.get("import_limit_kw", c.grid.import_limit_kw);
    r.get("export_limit_kw", c.grid.export_limit_kw);
    r.get("shed_price_cents_per_kwh", c.grid.shed_price_cents_per_kwh);
    r.finish();
  }
  if (const Json* j = root.child("ess")) {
    ObjectReader r(*j, "config.ess");
    r.get("capacity_kwh", c.ess.capacity_kwh);
    r.get("charge_eff", c.ess.charge_eff);
    r.get("discharge_eff", c.ess.discharge_eff);
    r.get("power_limit_kw", c.ess.power_limit_kw);
    r.get("soc_min_pct", c.ess.soc_min_pct);
    r.get("soc_max_pct", c.ess.soc_max_pct);
    r.get("soc_init_pct", c.ess.soc_init_pct);
    r.finish();
  }
  if (const Json* j = root.child("fleet")) {
    ObjectReader r(*j, "config.fleet");
    r.get("bus_count", c.fleet.bus_count);
    r.get("battery_kwh", c.fleet.battery_kwh);
    r.get("charge_eff", c.fleet.charge_eff);
    r.get("charger_limit_kw", c.fleet.charger_limit_kw);
    r.get("fleet_load_min_kw", c.fleet.fleet_load_min_kw);
    if (const Json* m = r.child("fleet_load_max_kw"); m && !m->is_null()) {
      if (!m->is_number()) throw Error(ErrorCode::Parse, "config.fleet.fleet_load_max_kw has the wrong type");
      c.fleet.fleet_load_max_kw = m->get<double>();
    }
    r.finish();
  }
  if (const Json* j = root.child("pv")) {
    ObjectReader r(*j, "config.pv");
    r.get("area_m2", c.pv.area_m2);
    r.get("efficiency", c.pv.efficiency);
    r.finish();
  }
  root.get("allow_pv_curtailment", c.allow_pv_curtailment);
  if (const Json* j = root.child("soc_defaults"); j && !j->is_null()) {
    ObjectReader r(*j, "config.soc_defaults");
    SocDefaults d;
    r.get("arrival_soc_pct", d.arrival_soc_pct);
    r.get("departure_soc_pct", d.departure_soc_pct);
    r.finish();
    file.soc_defaults = d;
  }
  root.get("name", file.name);
  root.finish();
  c = validate_config(c);
  return file;
}

StationFile load_station_file(const std::filesystem::path& path) {
  auto in = open(path);
  return read_station_file(in);
}

std::string station_file_json(const StationFile& file) {
  const auto& c = file.config;
  Json j;
  if (!file.name.empty()) j["name"] = file.name;
  j["time"] = {{"step_hours", c.time.step_hours},
               {"steps_per_day", c.time.steps_per_day},
               {"hours_per_price_point", c.time.hours_per_price_point}};
  j["grid"] = {{"import_limit_kw", c.grid.import_limit_kw},
               {"export_limit_kw", c.grid.export_limit_kw},
               {"shed_price_cents_per_kwh", c.grid.shed_price_cents_per_kwh}};
  j["ess"] = {{"capacity_kwh", c.ess.capacity_kwh},     {"charge_eff", c.ess.charge_eff},
              {"discharge_eff", c.ess.discharge_eff},   {"power_limit_kw", c.ess.power_limit_kw},
              {"soc_min_pct", c.ess.soc_min_pct},       {"soc_max_pct", c.ess.soc_max_pct},
              {"soc_init_pct", c.ess.soc_init_pct}};
  j["fleet"] = {{"bus_count", c.fleet.bus_count},
                {"battery_kwh", c.fleet.battery_kwh},
                {"charge_eff", c.fleet.charge_eff},
                {"charger_limit_kw", c.fleet.charger_limit_kw},
                {"fleet_load_min_kw", c.fleet.fleet_load_min_kw},
                {"fleet_load_max_kw", c.fleet.fleet_load_max_kw >= 0.0 ? Json(c.fleet.fleet_load_max_kw) : Json()}};
  j["pv"] = {{"area_m2", c.pv.area_m2}, {"efficiency", c.pv.efficiency}};
  j["allow_pv_curtailment"] = c.allow_pv_curtailment;
  if (file.soc_defaults)
    j["soc_defaults"] = {{"arrival_soc_pct", file.soc_defaults->arrival_soc_pct},
                         {"departure_soc_pct", file.soc_defaults->departure_soc_pct}};
  return j.dump(2);
}

}  // namespace ebcs::ingest
