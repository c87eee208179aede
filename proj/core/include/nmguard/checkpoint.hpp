#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nmguard/detector.hpp"
#include "nmguard/nn/network.hpp"

namespace nmguard {

inline constexpr const char* kCheckpointMagic = "nmguard-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// Free-form provenance stored in the manifest next to the architecture.
struct CheckpointInfo {
  std::string kind;  // "detector" or "baseline"
  std::string forwarding = "probabilities";
  std::string normalizer_fingerprint;
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// Writes `<dir>/manifest.json` (architecture, parameter shapes, info) and
/// `<dir>/weights.bin` (little-endian float64 parameters in declaration order).
void save_networks(const std::filesystem::path& dir, std::span<const nn::Network* const> networks,
                   const CheckpointInfo& info);

struct Checkpoint {
  CheckpointInfo info;
  std::vector<nn::Network> networks;
};

/// Rebuilds the networks from the manifest and loads their weights. Any
/// mismatch between manifest, blob and architecture is a DataError.
Checkpoint load_networks(const std::filesystem::path& dir);

void save_detector(const std::filesystem::path& dir, const Detector& detector, std::uint64_t seed = 0,
                   const std::string& config_hash = "");
Detector load_detector(const std::filesystem::path& dir);

void save_baseline(const std::filesystem::path& dir, const nn::Network& net,
                   const std::string& normalizer_fingerprint, std::uint64_t seed = 0,
                   const std::string& config_hash = "");
/// Returns the network; `fingerprint` (optional) receives the stored normalizer fingerprint.
nn::Network load_baseline(const std::filesystem::path& dir, std::string* fingerprint = nullptr);

}  // namespace nmguard
