#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nmguard/types.hpp"

namespace nmguard {

enum class MeterCategory { Consumption, Generation };

/// One meter's half-hourly readings for one day. Missing cells load as NaN.
struct RawMeterRow {
  std::string customer_id;
  MeterCategory category = MeterCategory::Consumption;
  Date date;
  std::vector<double> values;  // 48 half-hour readings, kWh
  double c_max = 0.0;
};

struct Reject {
  std::size_t line = 0;
  std::string reason;
};

template <typename Row>
struct LoadResult {
  std::vector<Row> rows;
  std::vector<Reject> rejects;
};

// Schemas (dates are ISO-8601):
//   meter:    customer_id,c_max,category,date,h00a,h00b,...,h23a,h23b
//   weather:  location_id,date,ghi00..ghi23,temp00..temp23
//   profiles: customer_id,c_max,location_id
std::string meter_csv_header();
std::string weather_csv_header();
std::string profiles_csv_header();

/// Bad header -> DataError naming line 1. Bad rows go to `rejects`.
LoadResult<RawMeterRow> load_meter_csv(const std::filesystem::path& path);
LoadResult<WeatherDay> load_weather_csv(const std::filesystem::path& path);
std::vector<CustomerProfile> load_profiles_csv(const std::filesystem::path& path);

void write_meter_csv(const std::filesystem::path& path, std::span<const RawMeterRow> rows);
void write_weather_csv(const std::filesystem::path& path, std::span<const WeatherDay> days);
void write_profiles_csv(const std::filesystem::path& path, std::span<const CustomerProfile> profiles);

/// Each rule drops the whole customer-day (both meters) and can be disabled.
struct CleanConfig {
  bool drop_negative_generation = true;
  bool drop_generation_over_cap = true;  // hourly generation (sum of the two halves) > c_max
  bool drop_missing = true;              // NaN slot or missing partner meter row
  bool drop_zero_consumption = true;
};

struct CleanCounts {
  std::size_t negative_generation = 0;
  std::size_t generation_over_cap = 0;
  std::size_t missing = 0;
  std::size_t zero_consumption = 0;

  std::size_t total() const { return negative_generation + generation_over_cap + missing + zero_consumption; }
};

struct CleanResult {
  std::vector<RawMeterRow> rows;  // sorted by (customer_id, date, category)
  CleanCounts dropped;            // each dropped day counted under the first rule it breaks
};

CleanResult clean(std::span<const RawMeterRow> rows, const CleanConfig& config = {});

/// hourly_k = (c_2k + c_2k+1) - (g_2k + g_2k+1).
DaySeries net_and_aggregate(const RawMeterRow& consumption, const RawMeterRow& generation);

/// Pairs consumption/generation rows per customer-day (canonical order).
/// Throws DataError for a day without both meters.
std::vector<DaySeries> build_day_series(std::span<const RawMeterRow> rows);

/// Profiles from the c_max column; location ids come from `locations`
/// (customer_id -> location_id) and default to the customer id.
std::vector<CustomerProfile> profiles_from_rows(std::span<const RawMeterRow> rows,
                                                const std::map<std::string, std::string>& locations = {});

/// Splits hourly consumption/generation into two equal halves per hour.
std::vector<RawMeterRow> to_meter_rows(const CustomerProfile& profile, const Date& date,
                                       std::span<const double> consumption,
                                       std::span<const double> generation);

}  // namespace nmguard

namespace nmguard {

/// Hourly net readings: `customer_id,date,r00..r23` (shortest exact decimals).
std::string days_csv_header();
void write_days_csv(const std::filesystem::path& path, std::span<const DaySeries> days);
std::vector<DaySeries> load_days_csv(const std::filesystem::path& path);

}  // namespace nmguard
