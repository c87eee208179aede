#include "nmguard/types.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "nmguard/error.hpp"

namespace nmguard {

using namespace std::chrono;

Date::Date(int y, unsigned m, unsigned d) {
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) {
    throw DataError("invalid calendar date " + std::to_string(y) + "-" + std::to_string(m) + "-" +
                    std::to_string(d));
  }
  days_ = sys_days{ymd};
}

namespace {

bool parse_uint(std::string_view text, int& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

Date Date::parse(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_uint(text.substr(0, 4), y) ||
      !parse_uint(text.substr(5, 2), m) || !parse_uint(text.substr(8, 2), d) || m < 1 || d < 1) {
    throw DataError("malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)");
  }
  return Date{y, static_cast<unsigned>(m), static_cast<unsigned>(d)};
}

std::string Date::iso() const {
  const auto v = ymd();
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(v.year()),
                static_cast<unsigned>(v.month()), static_cast<unsigned>(v.day()));
  return buf;
}

DaySeason encode_day_season(const Date& date) {
  const weekday wd{date.days()};
  const int day = static_cast<int>(wd.iso_encoding()) - 1;
  const unsigned m = static_cast<unsigned>(date.ymd().month());
  int season = 0;
  switch (m) {
    case 12: case 1: case 2: season = 0; break;
    case 3: case 4: case 5: season = 1; break;
    case 6: case 7: case 8: season = 2; break;
    default: season = 3; break;
  }
  return {day, season};
}

std::string Provenance::str() const {
  switch (kind) {
    case Kind::Real: return "real";
    case Kind::Synthetic: return "synthetic";
    case Kind::AttackInjected: return "attack" + std::to_string(attack_id);
    case Kind::AdasynGenerated: return "adasyn";
  }
  return "synthetic";
}

Provenance Provenance::parse(std::string_view text) {
  if (text == "real") return real();
  if (text == "synthetic") return synthetic();
  if (text == "adasyn") return adasyn();
  if (text.size() == 7 && text.substr(0, 6) == "attack" && text[6] >= '1' && text[6] <= '4') {
    return attack(text[6] - '0');
  }
  throw DataError("unknown provenance '" + std::string(text) + "'");
}

std::string_view to_string(Label label) {
  return label == Label::Malicious ? "malicious" : "benign";
}

Label parse_label(std::string_view text) {
  if (text == "benign" || text == "0") return Label::Benign;
  if (text == "malicious" || text == "1") return Label::Malicious;
  throw DataError("unknown label '" + std::string(text) + "'");
}

ValidationReport validate_day(const DaySeries& series, const CustomerProfile& profile) {
  if (series.customer_id != profile.customer_id) {
    throw DataError("validate_day: series belongs to '" + series.customer_id +
                    "' but profile is '" + profile.customer_id + "'");
  }
  ValidationReport report;
  if (!(profile.c_max >= 0.0) || !std::isfinite(profile.c_max)) {
    report.violations.push_back("c_max must be finite and non-negative");
  }
  if (series.readings.size() != kHoursPerDay) {
    report.violations.push_back("length != 24 (got " + std::to_string(series.readings.size()) + ")");
  }
  for (std::size_t t = 0; t < series.readings.size(); ++t) {
    const double r = series.readings[t];
    if (!std::isfinite(r)) {
      report.violations.push_back("reading " + std::to_string(t) + " is not finite");
    } else if (r < -profile.c_max) {
      report.violations.push_back("reading below -c_max at slot " + std::to_string(t));
    }
  }
  return report;
}

}  // namespace nmguard
