#include "nmguard/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "nmguard/error.hpp"
#include "nmguard/rng.hpp"

namespace nmguard {

namespace {

constexpr std::uint64_t kWeatherTag = 0x57;
constexpr std::uint64_t kLocationTag = 0x4c;
constexpr std::uint64_t kLifestyleTag = 0x53;
constexpr std::uint64_t kConsumptionTag = 0x43;
constexpr std::uint64_t kProfileTag = 0x50;

// +1 at the December solstice (Southern summer), -1 at the June solstice.
double season_phase(const Date& date) {
  using namespace std::chrono;
  const auto ymd = date.ymd();
  const sys_days jan1{ymd.year() / January / 1};
  const double doy = static_cast<double>((date.days() - jan1).count()) + 1.0;
  return std::cos(2.0 * std::numbers::pi * (doy - 355.0) / 365.25);
}

// Hourly load shape in kWh before the lifestyle, weekend and season factors.
double load_shape(std::size_t t) {
  double v = 0.3;
  if (t >= 6 && t <= 8) v += 0.5;
  if (t >= 9 && t <= 16) v += 0.15;
  if (t >= 17 && t <= 21) v += 0.9;
  if (t >= 22) v += 0.2;
  return v;
}

constexpr double kSeasonLoad[4] = {1.10, 1.00, 1.25, 0.95};

}  // namespace

void SynthConfig::validate() const {
  if (n_customers < 1 || n_days < 1) throw UsageError("synth: n_customers and n_days must be >= 1");
  if (!(c_max_low >= 0.0) || !(c_max_low <= c_max_high)) {
    throw UsageError("synth: c_max range must satisfy 0 <= low <= high");
  }
  if (n_locations < 1) throw UsageError("synth: n_locations must be >= 1");
  if (!(stc_irradiance > 0.0)) throw UsageError("synth: stc_irradiance must be positive");
}

WeatherDay synth_weather(const SynthConfig& config, const std::string& location_id, const Date& date) {
  const std::uint64_t loc_key = fnv1a64(location_id);
  Rng site = Rng::derive(config.seed, {loc_key, kLocationTag});
  const double site_scale = site.uniform(0.95, 1.05);
  const double site_temp = site.uniform(-1.5, 1.5);

  Rng rng = Rng::derive(config.seed, {loc_key, static_cast<std::uint64_t>(date.serial()), kWeatherTag});
  const double cloud = rng.uniform(0.3, 1.0);
  const double day_temp = rng.normal(0.0, 2.0);

  const double phase = season_phase(date);
  const double daylight = 12.0 + 2.2 * phase;
  const double sunrise = 12.5 - daylight / 2.0;
  const double peak = (800.0 + 250.0 * phase) * site_scale * cloud;
  const double baseline = 18.0 + 5.0 * phase + site_temp + day_temp - 3.0 * (1.0 - cloud);
  const double swing = 4.0 * (0.5 + 0.5 * cloud);

  WeatherDay w;
  w.location_id = location_id;
  w.date = date;
  w.irradiance.resize(kHoursPerDay);
  w.temperature.resize(kHoursPerDay);
  for (std::size_t t = 0; t < kHoursPerDay; ++t) {
    const double h = static_cast<double>(t) + 0.5;
    const double since_rise = h - sunrise;
    w.irradiance[t] = (since_rise > 0.0 && since_rise < daylight)
                          ? peak * std::sin(std::numbers::pi * since_rise / daylight)
                          : 0.0;
    w.temperature[t] =
        baseline + swing * std::sin(2.0 * std::numbers::pi * (h - 9.0) / 24.0) + rng.normal(0.0, 0.5);
  }
  return w;
}

std::vector<double> synth_generation(const WeatherDay& weather, const CustomerProfile& profile,
                                     const SynthConfig& config) {
  std::vector<double> gen(weather.irradiance.size());
  for (std::size_t t = 0; t < gen.size(); ++t) {
    const double g = weather.irradiance[t];
    const double derate = 1.0 + config.temp_coefficient * (weather.temperature[t] - 25.0);
    gen[t] = std::clamp(profile.c_max * (g / config.stc_irradiance) * derate, 0.0, profile.c_max);
  }
  return gen;
}

std::vector<double> synth_consumption(const CustomerProfile& profile, const Date& date,
                                      std::uint64_t seed) {
  const std::uint64_t key = fnv1a64(profile.customer_id);
  const double lifestyle = Rng::derive(seed, {key, kLifestyleTag}).uniform(0.6, 1.4);
  const DaySeason ds = encode_day_season(date);
  const double weekend = ds.day >= 5 ? 1.2 : 1.0;
  Rng rng = Rng::derive(seed, {key, static_cast<std::uint64_t>(date.serial()), kConsumptionTag});
  const double day_noise = std::exp(rng.normal(0.0, 0.10));

  std::vector<double> load(kHoursPerDay);
  for (std::size_t t = 0; t < kHoursPerDay; ++t) {
    const double v = load_shape(t) * lifestyle * weekend * kSeasonLoad[ds.season] * day_noise *
                     std::exp(rng.normal(0.0, 0.15));
    load[t] = std::max(kStandbyFloor, v);
  }
  return load;
}

std::vector<CustomerProfile> synth_profiles(const SynthConfig& config) {
  config.validate();
  std::vector<CustomerProfile> profiles;
  for (int i = 0; i < config.n_customers; ++i) {
    char id[16], loc[16];
    std::snprintf(id, sizeof id, "C%03d", i + 1);
    std::snprintf(loc, sizeof loc, "L%02d", i % config.n_locations + 1);
    Rng rng = Rng::derive(config.seed, {fnv1a64(id), kProfileTag});
    profiles.push_back({id, rng.uniform(config.c_max_low, config.c_max_high), loc});
  }
  return profiles;
}

SynthDataset synth_benign_dataset(const SynthConfig& config) {
  SynthDataset ds;
  ds.profiles = synth_profiles(config);

  std::vector<std::string> locations;
  for (const auto& p : ds.profiles) locations.push_back(p.location_id);
  std::sort(locations.begin(), locations.end());
  locations.erase(std::unique(locations.begin(), locations.end()), locations.end());
  for (const auto& loc : locations) {
    for (int d = 0; d < config.n_days; ++d) {
      ds.weather.push_back(synth_weather(config, loc, config.start_date.plus_days(d)));
    }
  }
  auto weather_for = [&](const std::string& loc, int d) -> const WeatherDay& {
    const auto li = static_cast<std::size_t>(
        std::lower_bound(locations.begin(), locations.end(), loc) - locations.begin());
    return ds.weather[li * static_cast<std::size_t>(config.n_days) + static_cast<std::size_t>(d)];
  };

  const auto total = static_cast<std::size_t>(config.n_customers) * static_cast<std::size_t>(config.n_days);
  ds.days.reserve(total);
  ds.consumption.reserve(total);
  ds.generation.reserve(total);
  for (const auto& profile : ds.profiles) {
    for (int d = 0; d < config.n_days; ++d) {
      const Date date = config.start_date.plus_days(d);
      auto gen = synth_generation(weather_for(profile.location_id, d), profile, config);
      auto load = synth_consumption(profile, date, config.seed);
      DaySeries day{profile.customer_id, date, std::vector<double>(kHoursPerDay)};
      for (std::size_t t = 0; t < kHoursPerDay; ++t) day.readings[t] = load[t] - gen[t];
      ds.days.push_back(std::move(day));
      ds.consumption.push_back(std::move(load));
      ds.generation.push_back(std::move(gen));
    }
  }
  return ds;
}

}  // namespace nmguard
