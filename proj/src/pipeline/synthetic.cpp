#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "ebcs/pipeline.hpp"

namespace ebcs::pipeline {

namespace {

constexpr double kLatitudeDeg = 53.5;
constexpr double kSolarNoonHour = 13.0;
constexpr double kDegToRad = M_PI / 180.0;

bool leap(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

double clear_sky_ghi(int day_of_year, double hour) {
  const double decl = 23.44 * kDegToRad * std::sin(2.0 * M_PI * (284 + day_of_year + 1) / 365.0);
  const double lat = kLatitudeDeg * kDegToRad;
  const double hour_angle = 15.0 * kDegToRad * (hour - kSolarNoonHour);
  const double sin_alt = std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(hour_angle);
  if (sin_alt <= 0.0) return 0.0;
  return 1050.0 * std::pow(sin_alt, 1.15);
}

double gauss_bump(double h, double centre, double width) {
  const double u = (h - centre) / width;
  return std::exp(-0.5 * u * u);
}

}  // namespace

std::string date_label(int year, int day_of_year) {
  static const int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int y = year, d = day_of_year;
  while (d >= (leap(y) ? 366 : 365)) d -= leap(y++) ? 366 : 365;
  int month = 0;
  while (true) {
    const int len = kDays[month] + (month == 1 && leap(y) ? 1 : 0);
    if (d < len) break;
    d -= len;
    ++month;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, month + 1, d + 1);
  return buf;
}

SyntheticYear synthetic_year(const SyntheticOptions& options, const TimeGrid& grid) {
  if (options.days < 1) throw Error(ErrorCode::Validation, "synthetic year needs at least one day");
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticYear out;
  double cloud = 0.0;
  double level = 0.0;
  for (int day = 0; day < options.days; ++day) {
    const std::string date = date_label(options.year, day);
    const double season = std::cos(2.0 * M_PI * (day - 15) / 365.0);  // +1 mid-January, -1 mid-July

    // Persistent cloudiness: AR(1) latent mapped to a transmission factor.
    cloud = 0.7 * cloud + 0.7 * normal(rng);
    const double transmission = 0.25 + 0.75 / (1.0 + std::exp(-(cloud + 0.8)));
    const double wobble = 0.05 + 0.10 * (1.0 - transmission);
    for (int t = 0; t < grid.steps_per_day; ++t) {
      const double hour = (t + 0.5) * grid.step_hours;
      const double clear = clear_sky_ghi(day, hour);
      double ghi = 0.0;
      if (clear > 0.0) ghi = std::max(0.0, clear * transmission * (1.0 + wobble * normal(rng)));
      out.solar.rows.push_back({date, t, ghi});
    }

    // Daily price level: AR(1) in log space with a winter premium.
    level = 0.6 * level + 0.25 * normal(rng);
    const double daily = 75.0 * (1.0 + 0.25 * season) * std::exp(level);
    for (int h = 0; h < 24; ++h) {
      const double shape = 0.55 + 0.35 * gauss_bump(h, 8.0, 1.8) + 0.65 * gauss_bump(h, 18.0, 2.2) -
                           0.15 * (1.0 - season) * gauss_bump(h, 13.0, 2.5);
      double price = daily * shape * std::exp(0.12 * normal(rng));
      if (unit(rng) < 0.01) price *= 2.0 + 2.0 * unit(rng);
      out.prices.rows.push_back({date, h, price});
    }
  }
  return out;
}

ParkingSchedule reference_schedule(const TimeGrid& grid) {
  struct Group {
    const char* buses;
    const char* w1[2];
    const char* w2[2];
  };
  // Two parking blocks per bus; the last group's first block ends where its second begins.
  static const Group kGroups[] = {
      {"AGMS", {"00:00", "06:00"}, {"14:00", "18:00"}}, {"BHNT", {"06:00", "14:00"}, {"18:00", "24:00"}},
      {"CIO", {"09:00", "13:00"}, {"21:00", "03:00"}},  {"DJP", {"03:00", "09:00"}, {"14:00", "21:00"}},
      {"EKQ", {"06:00", "12:00"}, {"20:00", "24:00"}},  {"FLR", {"00:00", "12:00"}, {"12:00", "20:00"}},
  };
  ParkingSchedule s;
  for (char name = 'A'; name <= 'T'; ++name) {
    for (const auto& g : kGroups) {
      if (std::string_view(g.buses).find(name) == std::string_view::npos) continue;
      const int b = name - 'A';
      BusSchedule bus{std::string(1, name), {}};
      ParkingWindow first, second;
      first.arrival_step = ingest::clock_to_step(g.w1[0], grid);
      first.departure_step = ingest::clock_to_step(g.w1[1], grid);
      first.arrival_soc_pct = 40.0 + 3.0 * (b % 5);
      first.departure_target_soc_pct = 90.0;
      first.soc_assigned = true;
      second.arrival_step = ingest::clock_to_step(g.w2[0], grid);
      second.departure_step = ingest::clock_to_step(g.w2[1], grid);
      if (second.departure_step == 0) second.departure_step = grid.steps_per_day;
      second.arrival_soc_pct = 50.0 + 4.0 * (b % 4);
      second.departure_target_soc_pct = 85.0;
      second.soc_assigned = true;
      bus.windows = {first, second};
      s.buses.push_back(std::move(bus));
    }
  }
  return s;
}

}  // namespace ebcs::pipeline
