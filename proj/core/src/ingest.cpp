#include "nmguard/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <tuple>

#include "nmguard/csv.hpp"
#include "nmguard/error.hpp"

namespace nmguard {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  return out;
}

void expect_header(std::istream& in, const std::string& header, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path.string() + " line 1: missing header");
  }
  const auto got = csv::chomp(line);
  if (got != header) {
    const auto cols = csv::split(got).size();
    const auto want = csv::split(header).size();
    throw DataError(path.string() + " line 1: header does not match schema (" + std::to_string(cols) +
                    " columns, expected " + std::to_string(want) + ")");
  }
}

std::string_view category_name(MeterCategory c) {
  return c == MeterCategory::Consumption ? "consumption" : "generation";
}

bool parse_category(std::string_view s, MeterCategory& out) {
  if (s == "consumption" || s == "GC") {
    out = MeterCategory::Consumption;
    return true;
  }
  if (s == "generation" || s == "GG") {
    out = MeterCategory::Generation;
    return true;
  }
  return false;
}

auto day_key(const RawMeterRow& r) { return std::tie(r.customer_id, r.date); }

}  // namespace

std::string meter_csv_header() {
  std::string h = "customer_id,c_max,category,date";
  char buf[8];
  for (int k = 0; k < 24; ++k) {
    std::snprintf(buf, sizeof buf, ",h%02da", k);
    h += buf;
    std::snprintf(buf, sizeof buf, ",h%02db", k);
    h += buf;
  }
  return h;
}

std::string weather_csv_header() {
  std::string h = "location_id,date";
  char buf[10];
  for (int k = 0; k < 24; ++k) {
    std::snprintf(buf, sizeof buf, ",ghi%02d", k);
    h += buf;
  }
  for (int k = 0; k < 24; ++k) {
    std::snprintf(buf, sizeof buf, ",temp%02d", k);
    h += buf;
  }
  return h;
}

std::string profiles_csv_header() { return "customer_id,c_max,location_id"; }

LoadResult<RawMeterRow> load_meter_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_header(in, meter_csv_header(), path);
  LoadResult<RawMeterRow> result;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = csv::chomp(line);
    if (view.empty()) continue;
    const auto cells = csv::split(view);
    if (cells.size() != 4 + kHalfHoursPerDay) {
      result.rejects.push_back({lineno, "expected 48 values, got " +
                                            std::to_string(cells.size() < 4 ? 0 : cells.size() - 4)});
      continue;
    }
    RawMeterRow row;
    row.customer_id = std::string(cells[0]);
    if (row.customer_id.empty()) {
      result.rejects.push_back({lineno, "empty customer_id"});
      continue;
    }
    if (!csv::parse_double(cells[1], row.c_max) || !std::isfinite(row.c_max) || row.c_max < 0.0) {
      result.rejects.push_back({lineno, "bad c_max"});
      continue;
    }
    if (!parse_category(cells[2], row.category)) {
      result.rejects.push_back({lineno, "unknown category '" + std::string(cells[2]) + "'"});
      continue;
    }
    try {
      row.date = Date::parse(cells[3]);
    } catch (const DataError& e) {
      result.rejects.push_back({lineno, e.what()});
      continue;
    }
    row.values.resize(kHalfHoursPerDay);
    bool ok = true;
    for (std::size_t k = 0; k < kHalfHoursPerDay && ok; ++k) {
      const auto cell = cells[4 + k];
      if (cell.empty()) {
        row.values[k] = kMissing;
      } else if (!csv::parse_double(cell, row.values[k]) || !std::isfinite(row.values[k])) {
        result.rejects.push_back({lineno, "non-numeric value in slot " + std::to_string(k)});
        ok = false;
      }
    }
    if (ok) result.rows.push_back(std::move(row));
  }
  return result;
}

LoadResult<WeatherDay> load_weather_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_header(in, weather_csv_header(), path);
  LoadResult<WeatherDay> result;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = csv::chomp(line);
    if (view.empty()) continue;
    const auto cells = csv::split(view);
    if (cells.size() != 2 + 2 * kHoursPerDay) {
      result.rejects.push_back({lineno, "expected 48 values, got " +
                                            std::to_string(cells.size() < 2 ? 0 : cells.size() - 2)});
      continue;
    }
    WeatherDay w;
    w.location_id = std::string(cells[0]);
    try {
      w.date = Date::parse(cells[1]);
    } catch (const DataError& e) {
      result.rejects.push_back({lineno, e.what()});
      continue;
    }
    w.irradiance.resize(kHoursPerDay);
    w.temperature.resize(kHoursPerDay);
    std::string reason;
    for (std::size_t k = 0; k < kHoursPerDay && reason.empty(); ++k) {
      if (!csv::parse_double(cells[2 + k], w.irradiance[k]) || !std::isfinite(w.irradiance[k])) {
        reason = "bad irradiance in slot " + std::to_string(k);
      } else if (w.irradiance[k] < 0.0) {
        reason = "negative irradiance in slot " + std::to_string(k);
      } else if (!csv::parse_double(cells[2 + kHoursPerDay + k], w.temperature[k]) ||
                 !std::isfinite(w.temperature[k])) {
        reason = "bad temperature in slot " + std::to_string(k);
      }
    }
    if (!reason.empty()) {
      result.rejects.push_back({lineno, reason});
      continue;
    }
    result.rows.push_back(std::move(w));
  }
  std::sort(result.rows.begin(), result.rows.end(), [](const WeatherDay& a, const WeatherDay& b) {
    return std::tie(a.location_id, a.date) < std::tie(b.location_id, b.date);
  });
  return result;
}

std::vector<CustomerProfile> load_profiles_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_header(in, profiles_csv_header(), path);
  std::vector<CustomerProfile> out;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = csv::chomp(line);
    if (view.empty()) continue;
    const auto cells = csv::split(view);
    CustomerProfile p;
    if (cells.size() != 3 || !csv::parse_double(cells[1], p.c_max) || !(p.c_max >= 0.0)) {
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": malformed profile row");
    }
    p.customer_id = std::string(cells[0]);
    p.location_id = std::string(cells[2]);
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.customer_id < b.customer_id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].customer_id == out[i - 1].customer_id) {
      throw DataError(path.string() + ": duplicate customer_id " + out[i].customer_id);
    }
  }
  return out;
}

void write_meter_csv(const std::filesystem::path& path, std::span<const RawMeterRow> rows) {
  auto out = open_out(path);
  out << meter_csv_header() << '\n';
  for (const auto& r : rows) {
    out << r.customer_id << ',' << csv::format_exact(r.c_max) << ',' << category_name(r.category)
        << ',' << r.date.iso();
    for (double v : r.values) {
      out << ',';
      if (!std::isnan(v)) out << csv::format_exact(v);
    }
    out << '\n';
  }
}

void write_weather_csv(const std::filesystem::path& path, std::span<const WeatherDay> days) {
  auto out = open_out(path);
  out << weather_csv_header() << '\n';
  for (const auto& w : days) {
    out << w.location_id << ',' << w.date.iso();
    for (double v : w.irradiance) out << ',' << csv::format_exact(v);
    for (double v : w.temperature) out << ',' << csv::format_exact(v);
    out << '\n';
  }
}

void write_profiles_csv(const std::filesystem::path& path, std::span<const CustomerProfile> profiles) {
  auto out = open_out(path);
  out << profiles_csv_header() << '\n';
  for (const auto& p : profiles) {
    out << p.customer_id << ',' << csv::format_exact(p.c_max) << ',' << p.location_id << '\n';
  }
}

CleanResult clean(std::span<const RawMeterRow> rows, const CleanConfig& config) {
  std::vector<RawMeterRow> sorted(rows.begin(), rows.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const RawMeterRow& a, const RawMeterRow& b) {
    return std::tie(a.customer_id, a.date, a.category) < std::tie(b.customer_id, b.date, b.category);
  });

  CleanResult result;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && day_key(sorted[j]) == day_key(sorted[i])) ++j;

    bool has_consumption = false, has_generation = false;
    bool negative_gen = false, over_cap = false, missing = false, zero_cons = false;
    for (std::size_t k = i; k < j; ++k) {
      const RawMeterRow& r = sorted[k];
      if (r.values.size() != kHalfHoursPerDay) missing = true;
      for (double v : r.values) missing = missing || std::isnan(v);
      if (r.category == MeterCategory::Generation) {
        has_generation = true;
        for (double v : r.values) negative_gen = negative_gen || v < 0.0;
        for (std::size_t h = 0; h + 1 < r.values.size(); h += 2) {
          over_cap = over_cap || r.values[h] + r.values[h + 1] > r.c_max;
        }
      } else {
        has_consumption = true;
        zero_cons = std::all_of(r.values.begin(), r.values.end(), [](double v) { return v == 0.0; });
      }
    }
    missing = missing || !has_consumption || !has_generation;

    bool drop = true;
    if (config.drop_negative_generation && negative_gen) {
      ++result.dropped.negative_generation;
    } else if (config.drop_generation_over_cap && over_cap) {
      ++result.dropped.generation_over_cap;
    } else if (config.drop_missing && missing) {
      ++result.dropped.missing;
    } else if (config.drop_zero_consumption && zero_cons) {
      ++result.dropped.zero_consumption;
    } else {
      drop = false;
    }
    if (!drop) {
      for (std::size_t k = i; k < j; ++k) result.rows.push_back(sorted[k]);
    }
    i = j;
  }
  return result;
}

DaySeries net_and_aggregate(const RawMeterRow& consumption, const RawMeterRow& generation) {
  if (consumption.customer_id != generation.customer_id || consumption.date != generation.date) {
    throw DataError("net_and_aggregate: rows belong to different customer-days (" +
                    consumption.customer_id + " " + consumption.date.iso() + " vs " +
                    generation.customer_id + " " + generation.date.iso() + ")");
  }
  if (consumption.category != MeterCategory::Consumption ||
      generation.category != MeterCategory::Generation) {
    throw DataError("net_and_aggregate: expected a consumption row and a generation row");
  }
  if (consumption.values.size() != kHalfHoursPerDay || generation.values.size() != kHalfHoursPerDay) {
    throw DataError("net_and_aggregate: rows must have 48 half-hour values");
  }
  DaySeries day{consumption.customer_id, consumption.date, std::vector<double>(kHoursPerDay)};
  for (std::size_t k = 0; k < kHoursPerDay; ++k) {
    const double c = consumption.values[2 * k] + consumption.values[2 * k + 1];
    const double g = generation.values[2 * k] + generation.values[2 * k + 1];
    day.readings[k] = c - g;
  }
  return day;
}

std::vector<DaySeries> build_day_series(std::span<const RawMeterRow> rows) {
  std::vector<const RawMeterRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const RawMeterRow* a, const RawMeterRow* b) {
    return std::tie(a->customer_id, a->date, a->category) < std::tie(b->customer_id, b->date, b->category);
  });
  std::vector<DaySeries> out;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && day_key(*sorted[j]) == day_key(*sorted[i])) ++j;
    const RawMeterRow* c = nullptr;
    const RawMeterRow* g = nullptr;
    for (std::size_t k = i; k < j; ++k) {
      (sorted[k]->category == MeterCategory::Consumption ? c : g) = sorted[k];
    }
    if (j - i != 2 || !c || !g) {
      throw DataError("customer " + sorted[i]->customer_id + " on " + sorted[i]->date.iso() +
                      " needs exactly one consumption and one generation row");
    }
    out.push_back(net_and_aggregate(*c, *g));
    i = j;
  }
  return out;
}

std::vector<CustomerProfile> profiles_from_rows(std::span<const RawMeterRow> rows,
                                                const std::map<std::string, std::string>& locations) {
  std::map<std::string, double> cap;
  for (const auto& r : rows) {
    auto [it, inserted] = cap.emplace(r.customer_id, r.c_max);
    if (!inserted && it->second != r.c_max) {
      throw DataError("customer " + r.customer_id + " has inconsistent c_max values");
    }
  }
  std::vector<CustomerProfile> out;
  for (const auto& [id, c_max] : cap) {
    const auto loc = locations.find(id);
    out.push_back({id, c_max, loc == locations.end() ? id : loc->second});
  }
  return out;
}

std::vector<RawMeterRow> to_meter_rows(const CustomerProfile& profile, const Date& date,
                                       std::span<const double> consumption,
                                       std::span<const double> generation) {
  RawMeterRow c{profile.customer_id, MeterCategory::Consumption, date, {}, profile.c_max};
  RawMeterRow g{profile.customer_id, MeterCategory::Generation, date, {}, profile.c_max};
  for (std::size_t k = 0; k < consumption.size(); ++k) {
    c.values.push_back(consumption[k] / 2.0);
    c.values.push_back(consumption[k] / 2.0);
    g.values.push_back(generation[k] / 2.0);
    g.values.push_back(generation[k] / 2.0);
  }
  return {std::move(c), std::move(g)};
}

}  // namespace nmguard

namespace nmguard {

std::string days_csv_header() {
  std::string h = "customer_id,date";
  char buf[8];
  for (int k = 0; k < 24; ++k) {
    std::snprintf(buf, sizeof buf, ",r%02d", k);
    h += buf;
  }
  return h;
}

void write_days_csv(const std::filesystem::path& path, std::span<const DaySeries> days) {
  auto out = open_out(path);
  out << days_csv_header() << '\n';
  for (const auto& d : days) {
    out << d.customer_id << ',' << d.date.iso();
    for (double v : d.readings) out << ',' << csv::format_exact(v);
    out << '\n';
  }
}

std::vector<DaySeries> load_days_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_header(in, days_csv_header(), path);
  std::vector<DaySeries> out;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = csv::chomp(line);
    if (view.empty()) continue;
    const auto cells = csv::split(view);
    if (cells.size() != 2 + kHoursPerDay) {
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": expected 24 readings");
    }
    DaySeries d{std::string(cells[0]), Date::parse(cells[1]), std::vector<double>(kHoursPerDay)};
    for (std::size_t k = 0; k < kHoursPerDay; ++k) {
      if (!csv::parse_double(cells[2 + k], d.readings[k]) || !std::isfinite(d.readings[k])) {
        throw DataError(path.string() + " line " + std::to_string(lineno) + ": bad reading r" +
                        std::to_string(k));
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace nmguard
