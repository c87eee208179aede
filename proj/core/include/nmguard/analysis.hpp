#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nmguard/types.hpp"

namespace nmguard {

struct AcfResult {
  std::vector<double> values;  // values[k] for lag k = 0..max_lag
  double ci_halfwidth = 0.0;   // 1.96 / sqrt(N)
};

/// Biased sample autocorrelation (full-series denominator). Requires
/// N > max_lag and non-zero variance; throws DataError otherwise.
AcfResult acf(std::span<const double> series, std::size_t max_lag);

/// Sample Pearson correlation. Equal lengths >= 2, both variances non-zero.
double pearson(std::span<const double> x, std::span<const double> y);

struct PatternReport {
  std::string customer_id;
  AcfResult acf;
  double lag24 = 0.0;
  bool daily_pattern = false;  // lag-24 value positive and outside the CI band
};

inline constexpr std::size_t kPatternMaxLag = 72;

/// Concatenates the customer's days in date order and inspects ACF up to `max_lag`.
PatternReport daily_pattern_report(std::span<const DaySeries> customer_days,
                                   std::size_t max_lag = kPatternMaxLag);

struct CorrelationRow {
  std::string customer_id;
  std::string target;  // "irradiance" or "temperature"
  double coefficient = 0.0;
};

/// Pearson(readings, weather channel) per customer over all of its days.
std::vector<CorrelationRow> weather_correlations(std::span<const DaySeries> days,
                                                 std::span<const CustomerProfile> profiles,
                                                 std::span<const WeatherDay> weather);

/// `lag,value,ci`
void write_acf_csv(const std::filesystem::path& path, const AcfResult& result);
/// `customer_id,target,coefficient`
void write_corr_csv(const std::filesystem::path& path, std::span<const CorrelationRow> rows);

}  // namespace nmguard
