#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nmguard/types.hpp"

namespace nmguard {

/// A day-series together with where it came from (benign or attack-injected).
struct LabeledDay {
  DaySeries day;
  Provenance provenance;
};

/// One 75-value sample per day in the fixed feature order. Every day's
/// (location, date) must have weather; otherwise DataError lists the missing keys.
std::vector<FeatureSample> assemble_samples(std::span<const LabeledDay> days,
                                            std::span<const WeatherDay> weather,
                                            std::span<const CustomerProfile> profiles);

struct SplitConfig {
  double train_fraction = 2.0 / 3.0;
  bool stratify_by_label = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Sorted, disjoint index sets covering the input.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per stratum, round(train_fraction * n) samples go to train. A stratum with
/// fewer than 3 samples is a DataError.
SplitIndices split_indices(std::span<const FeatureSample> samples, const SplitConfig& config);

struct SplitResult {
  std::vector<FeatureSample> train;
  std::vector<FeatureSample> test;
};

SplitResult split(std::span<const FeatureSample> samples, const SplitConfig& config);

/// Per-feature min-max scaling fitted on training data only.
class Normalizer {
 public:
  Normalizer() = default;

  static Normalizer fit(std::span<const FeatureSample> train);

  bool fitted() const { return fitted_; }
  const std::array<double, kFeatureCount>& min() const { return min_; }
  const std::array<double, kFeatureCount>& max() const { return max_; }

  /// (x - min) / (max - min); degenerate features map to 0; no clipping.
  double apply(std::size_t feature, double x) const;
  double invert(std::size_t feature, double y) const;
  FeatureSample transform(const FeatureSample& sample) const;
  std::vector<FeatureSample> transform(std::span<const FeatureSample> samples) const;

  /// 16 hex digits identifying the fitted parameters.
  std::string fingerprint() const;

  std::string to_json() const;
  static Normalizer from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Normalizer load(const std::filesystem::path& path);

 private:
  std::array<double, kFeatureCount> min_{};
  std::array<double, kFeatureCount> max_{};
  bool fitted_ = false;
};

struct NormalizeResult {
  std::vector<FeatureSample> train;
  std::vector<FeatureSample> test;
  Normalizer normalizer;
};

NormalizeResult fit_transform_normalize(std::span<const FeatureSample> train,
                                        std::span<const FeatureSample> test);

struct AdasynConfig {
  int k_neighbors = 5;
  double target_ratio = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// How one synthetic sample was made: x_base + lambda * (x_neighbor - x_base),
/// with indices into the input training set.
struct AdasynRecord {
  std::size_t base = 0;
  std::size_t neighbor = 0;
  double lambda = 0.0;
  std::array<double, kFeatureCount> unrounded{};
};

struct AdasynResult {
  std::vector<FeatureSample> samples;  // input order, synthetic appended
  std::vector<AdasynRecord> records;   // one per synthetic sample, in order
  Label minority = Label::Benign;
  std::vector<std::size_t> allocation;  // synthetic count per minority point
};

/// Adaptive synthetic oversampling of the minority class. Neighbours are found
/// by Euclidean distance over all 75 features of the (normalized) training set.
/// When `normalizer` is given, the day and season features are snapped to the
/// nearest normalized valid code; otherwise to the nearest raw integer code.
AdasynResult adasyn(std::span<const FeatureSample> train, const AdasynConfig& config,
                    const Normalizer* normalizer = nullptr);

/// Per-label counts {benign, malicious}.
std::array<std::size_t, 2> class_counts(std::span<const FeatureSample> samples);

}  // namespace nmguard
