#include "nmguard/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

#include "nmguard/csv.hpp"
#include "nmguard/error.hpp"

namespace nmguard {

AcfResult acf(std::span<const double> series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n <= max_lag) {
    throw DataError("ACF needs more than max_lag = " + std::to_string(max_lag) + " points, got " +
                    std::to_string(n));
  }
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  double denom = 0.0;
  for (double v : series) denom += (v - mean) * (v - mean);
  if (!(denom > 0.0)) throw DataError("ACF undefined for constant series");

  AcfResult out;
  out.values.resize(max_lag + 1);
  out.values[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) num += (series[t] - mean) * (series[t + k] - mean);
    out.values[k] = num / denom;
  }
  out.ci_halfwidth = 1.96 / std::sqrt(static_cast<double>(n));
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DataError("pearson needs two series of equal length >= 2");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DataError("pearson undefined for zero-variance series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

PatternReport daily_pattern_report(std::span<const DaySeries> customer_days, std::size_t max_lag) {
  std::vector<const DaySeries*> sorted;
  for (const auto& d : customer_days) sorted.push_back(&d);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const DaySeries* a, const DaySeries* b) { return a->date < b->date; });
  std::vector<double> series;
  for (const auto* d : sorted) series.insert(series.end(), d->readings.begin(), d->readings.end());

  PatternReport report;
  if (!sorted.empty()) report.customer_id = sorted.front()->customer_id;
  report.acf = acf(series, max_lag);
  report.lag24 = max_lag >= 24 ? report.acf.values[24] : 0.0;
  report.daily_pattern = max_lag >= 24 && report.lag24 > report.acf.ci_halfwidth;
  return report;
}

std::vector<CorrelationRow> weather_correlations(std::span<const DaySeries> days,
                                                 std::span<const CustomerProfile> profiles,
                                                 std::span<const WeatherDay> weather) {
  std::map<std::pair<std::string, Date>, const WeatherDay*> wx;
  for (const auto& w : weather) wx[{w.location_id, w.date}] = &w;
  std::map<std::string, const CustomerProfile*> prof;
  for (const auto& p : profiles) prof[p.customer_id] = &p;

  struct Acc {
    std::vector<double> readings, irradiance, temperature;
  };
  std::map<std::string, Acc> acc;
  for (const auto& d : days) {
    const auto p = prof.find(d.customer_id);
    if (p == prof.end()) throw DataError("no profile for customer " + d.customer_id);
    const auto w = wx.find({p->second->location_id, d.date});
    if (w == wx.end()) {
      throw DataError("no weather for location " + p->second->location_id + " on " + d.date.iso());
    }
    auto& a = acc[d.customer_id];
    a.readings.insert(a.readings.end(), d.readings.begin(), d.readings.end());
    a.irradiance.insert(a.irradiance.end(), w->second->irradiance.begin(), w->second->irradiance.end());
    a.temperature.insert(a.temperature.end(), w->second->temperature.begin(),
                         w->second->temperature.end());
  }
  std::vector<CorrelationRow> rows;
  for (const auto& [id, a] : acc) {
    rows.push_back({id, "irradiance", pearson(a.readings, a.irradiance)});
    rows.push_back({id, "temperature", pearson(a.readings, a.temperature)});
  }
  return rows;
}

void write_acf_csv(const std::filesystem::path& path, const AcfResult& result) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "lag,value,ci\n";
  for (std::size_t k = 0; k < result.values.size(); ++k) {
    out << k << ',' << csv::format_exact(result.values[k]) << ','
        << csv::format_exact(result.ci_halfwidth) << '\n';
  }
}

void write_corr_csv(const std::filesystem::path& path, std::span<const CorrelationRow> rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "customer_id,target,coefficient\n";
  for (const auto& r : rows) {
    out << r.customer_id << ',' << r.target << ',' << csv::format_exact(r.coefficient) << '\n';
  }
}

}  // namespace nmguard
