#include "nmguard/sample_csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "nmguard/csv.hpp"
#include "nmguard/error.hpp"

namespace nmguard {

namespace csv {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

std::string format_exact(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string format_sig(double value, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return buf;
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace csv

std::string sample_csv_header() {
  std::string h = "label,provenance";
  for (std::size_t i = 0; i < kFeatureCount; ++i) h += ",f" + std::to_string(i);
  return h;
}

void write_samples_csv(std::ostream& out, std::span<const FeatureSample> samples) {
  out << sample_csv_header() << '\n';
  for (const auto& s : samples) {
    out << to_string(s.label) << ',' << s.provenance.str();
    for (double v : s.features) out << ',' << csv::format_sig(v, kSampleCsvDigits);
    out << '\n';
  }
}

void write_samples_csv(const std::filesystem::path& path, std::span<const FeatureSample> samples) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_samples_csv(out, samples);
}

std::vector<FeatureSample> read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || csv::chomp(line) != sample_csv_header()) {
    throw DataError("sample csv line 1: missing or malformed header");
  }
  std::vector<FeatureSample> samples;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = csv::chomp(line);
    if (view.empty()) continue;
    const auto cells = csv::split(view);
    if (cells.size() != kFeatureCount + 2) {
      throw DataError("sample csv line " + std::to_string(lineno) + ": expected " +
                      std::to_string(kFeatureCount + 2) + " columns, got " +
                      std::to_string(cells.size()));
    }
    FeatureSample s;
    s.label = parse_label(cells[0]);
    s.provenance = Provenance::parse(cells[1]);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      if (!csv::parse_double(cells[i + 2], s.features[i]) || !std::isfinite(s.features[i])) {
        throw DataError("sample csv line " + std::to_string(lineno) + ": bad value in f" +
                        std::to_string(i));
      }
    }
    samples.push_back(s);
  }
  return samples;
}

std::vector<FeatureSample> read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_samples_csv(in);
}

}  // namespace nmguard
