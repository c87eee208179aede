#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace nmguard {

inline constexpr std::size_t kHoursPerDay = 24;
inline constexpr std::size_t kHalfHoursPerDay = 48;
inline constexpr std::size_t kFeatureCount = 75;

// Offsets into the 75-value feature vector.
inline constexpr std::size_t kReadingsOffset = 0;
inline constexpr std::size_t kIrradianceOffset = 24;
inline constexpr std::size_t kTemperatureOffset = 48;
inline constexpr std::size_t kCmaxIndex = 72;
inline constexpr std::size_t kDayIndex = 73;
inline constexpr std::size_t kSeasonIndex = 74;

/// Calendar date backed by std::chrono::sys_days. ISO-8601 text form.
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::sys_days days) : days_(days) {}
  Date(int year, unsigned month, unsigned day);

  /// Parses `YYYY-MM-DD`; throws DataError on malformed or invalid dates.
  static Date parse(std::string_view text);

  std::chrono::sys_days days() const { return days_; }
  std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }
  std::int64_t serial() const { return days_.time_since_epoch().count(); }
  std::string iso() const;

  Date plus_days(int n) const { return Date{days_ + std::chrono::days{n}}; }

  friend auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

struct DaySeason {
  int day = 0;     // 0 = Monday ... 6 = Sunday
  int season = 0;  // 0 summer, 1 autumn, 2 winter, 3 spring (Southern Hemisphere)

  friend bool operator==(const DaySeason&, const DaySeason&) = default;
};

/// Day-of-week and Southern-Hemisphere meteorological season.
DaySeason encode_day_season(const Date& date);

struct CustomerProfile {
  std::string customer_id;
  double c_max = 0.0;  // kWh per hour
  std::string location_id;
};

/// Hourly net readings (consumption minus generation) for one customer-day.
struct DaySeries {
  std::string customer_id;
  Date date;
  std::vector<double> readings;
};

struct WeatherDay {
  std::string location_id;
  Date date;
  std::vector<double> irradiance;   // W/m^2
  std::vector<double> temperature;  // deg C
};

enum class Label : std::uint8_t { Benign = 0, Malicious = 1 };

struct Provenance {
  enum class Kind : std::uint8_t { Real, Synthetic, AttackInjected, AdasynGenerated };

  Kind kind = Kind::Synthetic;
  int attack_id = 0;  // 1-4 when kind == AttackInjected

  static Provenance real() { return {Kind::Real, 0}; }
  static Provenance synthetic() { return {Kind::Synthetic, 0}; }
  static Provenance attack(int id) { return {Kind::AttackInjected, id}; }
  static Provenance adasyn() { return {Kind::AdasynGenerated, 0}; }

  Label label() const { return kind == Kind::AttackInjected ? Label::Malicious : Label::Benign; }

  /// "real", "synthetic", "attack1".."attack4", "adasyn".
  std::string str() const;
  static Provenance parse(std::string_view text);

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

struct FeatureSample {
  std::array<double, kFeatureCount> features{};
  Label label = Label::Benign;
  Provenance provenance;
};

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks a day against the physical bounds of its owner. A customer mismatch
/// is a hard error; every other problem is reported.
ValidationReport validate_day(const DaySeries& series, const CustomerProfile& profile);

}  // namespace nmguard
