#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nmguard/nn/network.hpp"
#include "nmguard/nn/trainer.hpp"
#include "nmguard/types.hpp"

namespace nmguard {

/// What stage 1 (and stage 2) hand to the next stage.
enum class Forwarding { Probabilities, Penultimate };

std::string_view to_string(Forwarding f);
Forwarding parse_forwarding(std::string_view text);

struct StageSpec {
  int stage_id = 1;
  nn::InputShape input;
  std::vector<nn::LayerSpec> layers;
};

/// The tuned layer stacks of the three cascade stages. `forwarded_width` is the
/// width of the previous stage's forwarded output (2 for probabilities).
StageSpec stage_spec(int stage_id, std::size_t forwarded_width = 2);

enum class Baseline { Mlp, Gru, Cnn, CnnGru };
inline constexpr std::array<Baseline, 4> kAllBaselines{Baseline::Mlp, Baseline::Gru, Baseline::Cnn,
                                                       Baseline::CnnGru};

std::string_view to_string(Baseline b);
Baseline parse_baseline(std::string_view text);

struct BaselineSpec {
  Baseline arch = Baseline::CnnGru;
  nn::InputShape input;
  std::vector<nn::LayerSpec> layers;
};

BaselineSpec baseline_spec(Baseline arch);

/// Instantiates a stage; throws UsageError if `spec` deviates from the tuned
/// architecture for its stage id.
nn::Network build_stage(const StageSpec& spec, std::uint64_t seed, nn::Init init = nn::Init::Glorot);
nn::Network build_baseline(const BaselineSpec& spec, std::uint64_t seed, nn::Init init = nn::Init::Glorot);

/// Feature-vector -> tensor adapters (inputs are normalized samples).
nn::Tensor readings_sequence(std::span<const FeatureSample> samples);  // [N, 24, 1]
nn::Tensor readings_vector(std::span<const FeatureSample> samples);    // [N, 24]
/// [N, 24, 2 + F]: irradiance_t, temperature_t, then `forwarded` row broadcast.
nn::Tensor stage2_inputs(std::span<const FeatureSample> samples, const nn::Tensor& forwarded);
/// [N, 3 + F]: c_max, day, season, then `forwarded`.
nn::Tensor stage3_inputs(std::span<const FeatureSample> samples, const nn::Tensor& forwarded);
nn::Tensor baseline_inputs(Baseline arch, std::span<const FeatureSample> samples);

std::vector<Label> labels_of(std::span<const FeatureSample> samples);

struct Detector {
  nn::Network stage1;
  nn::Network stage2;
  nn::Network stage3;
  Forwarding forwarding = Forwarding::Probabilities;
  std::string normalizer_fingerprint;
};

/// Freshly initialised cascade.
Detector make_detector(Forwarding forwarding, std::uint64_t seed, std::string normalizer_fingerprint,
                       nn::Init init = nn::Init::Glorot);

/// What a stage passes on: softmax output or the activations feeding its head.
nn::Tensor forwarded_output(const nn::Network& stage, const nn::Tensor& inputs, Forwarding forwarding);

struct TrainedDetector {
  Detector detector;
  std::array<std::vector<nn::EpochRecord>, 3> curves;
};

using EpochCallback = std::function<void(const std::string& model, const nn::EpochRecord&)>;

/// Sequential freeze-train: stage 1 on readings, then stage 2 on weather plus
/// frozen stage-1 output, then stage 3 on scalars plus frozen stage-2 output.
/// `configs[i]` drives stage i + 1; the initialisation seed is configs[0].seed.
TrainedDetector train_pipeline(std::span<const FeatureSample> train, const std::array<nn::TrainConfig, 3>& configs,
                               Forwarding forwarding, std::string normalizer_fingerprint,
                               const EpochCallback& on_epoch = {});
TrainedDetector train_pipeline(std::span<const FeatureSample> train, const nn::TrainConfig& config,
                               Forwarding forwarding, std::string normalizer_fingerprint,
                               const EpochCallback& on_epoch = {});

/// Trains the stages of an existing cascade in order, each on the frozen
/// outputs of its predecessor.
std::array<std::vector<nn::EpochRecord>, 3> train_stages(Detector& detector, std::span<const FeatureSample> train,
                                                         const std::array<nn::TrainConfig, 3>& configs,
                                                         const EpochCallback& on_epoch = {});

/// [N, 2] (p_benign, p_malicious) from the requested stage. Inputs must have
/// been normalized with the normalizer whose fingerprint is passed.
nn::Tensor predict(const Detector& detector, std::span<const FeatureSample> samples, int stage,
                   const std::string& normalizer_fingerprint);

std::array<double, 2> predict_one(const Detector& detector, const FeatureSample& sample, int stage,
                                  const std::string& normalizer_fingerprint);

/// Column 1 of a [N, 2] probability tensor.
std::vector<double> malicious_scores(const nn::Tensor& probs);

}  // namespace nmguard
