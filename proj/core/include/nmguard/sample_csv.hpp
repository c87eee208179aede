#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nmguard/types.hpp"

namespace nmguard {

/// Significant digits used for feature values in the sample CSV.
inline constexpr int kSampleCsvDigits = 9;

/// `label,provenance,f0,...,f74`
std::string sample_csv_header();

void write_samples_csv(std::ostream& out, std::span<const FeatureSample> samples);
void write_samples_csv(const std::filesystem::path& path, std::span<const FeatureSample> samples);

/// Throws DataError naming the line on a bad header or malformed row.
std::vector<FeatureSample> read_samples_csv(std::istream& in);
std::vector<FeatureSample> read_samples_csv(const std::filesystem::path& path);

}  // namespace nmguard
