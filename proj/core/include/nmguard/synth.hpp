#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "nmguard/types.hpp"

namespace nmguard {

struct SynthConfig {
  int n_customers = 31;
  int n_days = 365;
  Date start_date{2010, 7, 1};
  std::uint64_t seed = 7;
  double c_max_low = 1.5;   // kWh/h
  double c_max_high = 4.5;  // kWh/h
  int n_locations = 8;
  double temp_coefficient = -0.004;  // per deg C
  double stc_irradiance = 1000.0;    // W/m^2

  /// Throws UsageError when a field is out of range.
  void validate() const;
};

/// Clear-sky half-sine irradiance scaled by a daily cloudiness factor in
/// [0.3, 1.0]; temperature is a seasonal baseline plus a diurnal sinusoid and
/// noise. Deterministic in (seed, location, date).
WeatherDay synth_weather(const SynthConfig& config, const std::string& location_id, const Date& date);

/// PV output per hour: c_max * (G / G_stc) * (1 + gamma * (T - 25)) clamped to [0, c_max].
std::vector<double> synth_generation(const WeatherDay& weather, const CustomerProfile& profile,
                                     const SynthConfig& config);

/// Household load per hour with morning and evening peaks, weekend and seasonal
/// multipliers and lognormal noise. Every value is at least kStandbyFloor.
std::vector<double> synth_consumption(const CustomerProfile& profile, const Date& date,
                                      std::uint64_t seed);

inline constexpr double kStandbyFloor = 0.05;

/// Customer ids are zero-padded ("C001") so lexical order equals numeric order.
std::vector<CustomerProfile> synth_profiles(const SynthConfig& config);

struct SynthDataset {
  std::vector<CustomerProfile> profiles;
  std::vector<DaySeries> days;       // sorted by (customer_id, date)
  std::vector<WeatherDay> weather;   // sorted by (location_id, date)
  // Per-customer-day hourly components, parallel to `days`.
  std::vector<std::vector<double>> consumption;
  std::vector<std::vector<double>> generation;
};

/// readings = consumption - generation for every customer-day.
SynthDataset synth_benign_dataset(const SynthConfig& config);

}  // namespace nmguard
