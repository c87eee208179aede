#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nmguard/attacks.hpp"
#include "nmguard/detector.hpp"
#include "nmguard/ingest.hpp"
#include "nmguard/nn/trainer.hpp"
#include "nmguard/prep.hpp"
#include "nmguard/synth.hpp"

namespace nmguard {

struct TrainingSettings {
  std::size_t batch_size = 64;
  int max_epochs = 100;
  int patience = 10;
  double validation_fraction = 0.1;
  nn::AdamConfig adam;
  /// Per-model epoch caps; 0 means use max_epochs. Index by model_index().
  std::array<int, 7> epochs{};
  bool adasyn = true;
};

/// Every knob of a run. Sub-seeds are derived from `seed`.
struct RunConfig {
  std::uint64_t seed = 7;
  SynthConfig synth;
  std::array<AttackParams, 4> attacks;
  SplitConfig split;
  AdasynConfig adasyn;
  CleanConfig clean;
  TrainingSettings train;
  Forwarding forwarding = Forwarding::Probabilities;
  std::vector<Baseline> baselines{kAllBaselines.begin(), kAllBaselines.end()};
  int threads = 1;
  std::size_t acf_max_lag = 72;
  std::filesystem::path run_root = "runs";

  /// Pushes the global seed into every sub-config and validates ranges.
  void finalize();
  void validate() const;
};

/// Model names in canonical order: mlp, gru, cnn, cnngru, stage1, stage2, stage3.
inline constexpr std::array<const char*, 7> kModelNames{"mlp", "gru", "cnn", "cnngru", "stage1", "stage2", "stage3"};
std::size_t model_index(std::string_view name);

/// Training config for one named model.
nn::TrainConfig train_config_for(const RunConfig& config, std::string_view model);

struct ConfigKeyInfo {
  std::string key;
  std::string type;
  std::string default_value;
  std::string doc;
};

/// Every accepted key with its default, in documentation order.
std::vector<ConfigKeyInfo> config_keys();

/// Sets one dotted key from text; unknown keys and malformed values are UsageErrors.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& config, const std::string& key);

/// Applies `key=value`.
void apply_override(RunConfig& config, const std::string& assignment);

/// Nested JSON object (sections split on '.'); unknown keys are rejected.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& config);

/// 16 hex digits over the canonical JSON form.
std::string config_hash(const RunConfig& config);

/// Derived sub-seed for a named pipeline step.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view step);

}  // namespace nmguard
