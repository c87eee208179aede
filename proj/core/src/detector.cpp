#include "nmguard/detector.hpp"

#include <algorithm>

#include "nmguard/error.hpp"
#include "nmguard/rng.hpp"

namespace nmguard {

namespace {

using nn::Activation;
using nn::LayerKind;
using nn::LayerSpec;
using nn::Shape;
using nn::Tensor;

LayerSpec dense(std::size_t units, Activation act) { return {LayerKind::Dense, units, act, false}; }
LayerSpec conv(std::size_t units, Activation act) { return {LayerKind::Conv1D, units, act, true}; }
LayerSpec gru(std::size_t units, Activation act, bool seq = false) { return {LayerKind::Gru, units, act, seq}; }
LayerSpec head() { return dense(2, Activation::Softmax); }

std::string stage_name(int id) { return "stage" + std::to_string(id); }

void require_rows(const Tensor& forwarded, std::size_t n) {
  if (forwarded.rank() != 2 || forwarded.dim(0) != n) {
    throw UsageError("forwarded output must be [" + std::to_string(n) + ", F], got " +
                     nn::shape_str(forwarded.shape()));
  }
}

}  // namespace

std::string_view to_string(Forwarding f) {
  return f == Forwarding::Probabilities ? "probabilities" : "penultimate";
}

Forwarding parse_forwarding(std::string_view text) {
  if (text == "probabilities") return Forwarding::Probabilities;
  if (text == "penultimate") return Forwarding::Penultimate;
  throw UsageError("forwarding must be 'probabilities' or 'penultimate', got '" + std::string(text) + "'");
}

StageSpec stage_spec(int stage_id, std::size_t forwarded_width) {
  switch (stage_id) {
    case 1:
      return {1, {kHoursPerDay, 1},
              {conv(64, Activation::Relu), conv(64, Activation::Relu), gru(64, Activation::Sigmoid), head()}};
    case 2:
      return {2, {kHoursPerDay, 2 + forwarded_width},
              {gru(128, Activation::Tanh, true), gru(64, Activation::Tanh, true), gru(128, Activation::Tanh), head()}};
    case 3:
      return {3, {0, 3 + forwarded_width},
              {dense(128, Activation::Relu), dense(128, Activation::Relu), dense(128, Activation::Relu),
               dense(64, Activation::Relu), head()}};
    default:
      throw UsageError("stage id must be 1, 2 or 3, got " + std::to_string(stage_id));
  }
}

std::string_view to_string(Baseline b) {
  switch (b) {
    case Baseline::Mlp: return "mlp";
    case Baseline::Gru: return "gru";
    case Baseline::Cnn: return "cnn";
    case Baseline::CnnGru: return "cnngru";
  }
  return "?";
}

Baseline parse_baseline(std::string_view text) {
  for (auto b : kAllBaselines) {
    if (to_string(b) == text) return b;
  }
  throw UsageError("unknown baseline '" + std::string(text) + "' (mlp, gru, cnn, cnngru)");
}

BaselineSpec baseline_spec(Baseline arch) {
  switch (arch) {
    case Baseline::Mlp:
      return {arch, {0, kHoursPerDay},
              {dense(128, Activation::Linear), dense(128, Activation::Sigmoid), dense(128, Activation::Sigmoid),
               dense(256, Activation::Sigmoid), dense(256, Activation::Relu), dense(256, Activation::Elu), head()}};
    case Baseline::Gru:
      return {arch, {kHoursPerDay, 1}, {gru(64, Activation::Sigmoid, true), gru(128, Activation::Relu), head()}};
    case Baseline::Cnn:
      return {arch, {kHoursPerDay, 1},
              {conv(128, Activation::Relu), conv(64, Activation::Tanh), dense(256, Activation::Sigmoid),
               dense(128, Activation::Elu), dense(128, Activation::Tanh), dense(256, Activation::Sigmoid),
               dense(512, Activation::Relu), dense(128, Activation::Tanh), head()}};
    case Baseline::CnnGru:
      return {arch, {kHoursPerDay, 1},
              {conv(64, Activation::Relu), conv(32, Activation::Relu), gru(32, Activation::Relu), head()}};
  }
  throw UsageError("unknown baseline");
}

nn::Network build_stage(const StageSpec& spec, std::uint64_t seed, nn::Init init) {
  if (spec.stage_id < 1 || spec.stage_id > 3) {
    throw UsageError("stage id must be 1, 2 or 3, got " + std::to_string(spec.stage_id));
  }
  std::size_t forwarded = 2;
  if (spec.stage_id == 2 && spec.input.width >= 2) forwarded = spec.input.width - 2;
  if (spec.stage_id == 3 && spec.input.width >= 3) forwarded = spec.input.width - 3;
  const StageSpec expected = stage_spec(spec.stage_id, forwarded);
  if (spec.input != expected.input || forwarded == 0) {
    throw UsageError(stage_name(spec.stage_id) + ": input geometry does not match the stage architecture");
  }
  if (spec.layers != expected.layers) {
    throw UsageError(stage_name(spec.stage_id) + ": layer list does not match the stage architecture");
  }
  Rng rng = Rng::derive(seed, {fnv1a64(stage_name(spec.stage_id))});
  return nn::build_network(stage_name(spec.stage_id), spec.input, spec.layers, rng, init);
}

nn::Network build_baseline(const BaselineSpec& spec, std::uint64_t seed, nn::Init init) {
  const BaselineSpec expected = baseline_spec(spec.arch);
  if (spec.input != expected.input || spec.layers != expected.layers) {
    throw UsageError(std::string(to_string(spec.arch)) + ": spec does not match the baseline architecture");
  }
  const std::string name(to_string(spec.arch));
  Rng rng = Rng::derive(seed, {fnv1a64(name)});
  return nn::build_network(name, spec.input, spec.layers, rng, init);
}

Tensor readings_sequence(std::span<const FeatureSample> samples) {
  Tensor t(Shape{samples.size(), kHoursPerDay, 1});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::copy_n(samples[i].features.begin() + kReadingsOffset, kHoursPerDay, t.data() + i * kHoursPerDay);
  }
  return t;
}

Tensor readings_vector(std::span<const FeatureSample> samples) {
  return readings_sequence(samples).reshaped(Shape{samples.size(), kHoursPerDay});
}

Tensor stage2_inputs(std::span<const FeatureSample> samples, const Tensor& forwarded) {
  require_rows(forwarded, samples.size());
  const std::size_t f = forwarded.dim(1);
  const std::size_t w = 2 + f;
  Tensor t(Shape{samples.size(), kHoursPerDay, w});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      double* row = t.data() + (i * kHoursPerDay + h) * w;
      row[0] = samples[i].features[kIrradianceOffset + h];
      row[1] = samples[i].features[kTemperatureOffset + h];
      std::copy_n(forwarded.data() + i * f, f, row + 2);
    }
  }
  return t;
}

Tensor stage3_inputs(std::span<const FeatureSample> samples, const Tensor& forwarded) {
  require_rows(forwarded, samples.size());
  const std::size_t f = forwarded.dim(1);
  const std::size_t w = 3 + f;
  Tensor t(Shape{samples.size(), w});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double* row = t.data() + i * w;
    row[0] = samples[i].features[kCmaxIndex];
    row[1] = samples[i].features[kDayIndex];
    row[2] = samples[i].features[kSeasonIndex];
    std::copy_n(forwarded.data() + i * f, f, row + 3);
  }
  return t;
}

Tensor baseline_inputs(Baseline arch, std::span<const FeatureSample> samples) {
  return arch == Baseline::Mlp ? readings_vector(samples) : readings_sequence(samples);
}

std::vector<Label> labels_of(std::span<const FeatureSample> samples) {
  std::vector<Label> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

Detector make_detector(Forwarding forwarding, std::uint64_t seed, std::string normalizer_fingerprint,
                       nn::Init init) {
  const std::size_t f1 = forwarding == Forwarding::Probabilities ? 2 : stage_spec(1).layers[2].units;
  const std::size_t f2 = forwarding == Forwarding::Probabilities ? 2 : stage_spec(2).layers[2].units;
  return Detector{build_stage(stage_spec(1), seed, init), build_stage(stage_spec(2, f1), seed, init),
                  build_stage(stage_spec(3, f2), seed, init), forwarding, std::move(normalizer_fingerprint)};
}

Tensor forwarded_output(const nn::Network& stage, const Tensor& inputs, Forwarding forwarding) {
  if (forwarding == Forwarding::Probabilities) return nn::predict_batched(stage, inputs);
  nn::NoGradGuard guard;
  const std::size_t n = inputs.dim(0);
  const std::size_t stride = inputs.size() / n;
  Tensor out;
  constexpr std::size_t kBatch = 256;
  for (std::size_t start = 0; start < n; start += kBatch) {
    const std::size_t m = std::min(kBatch, n - start);
    Shape shape = inputs.shape();
    shape[0] = m;
    Tensor chunk(shape);
    std::copy_n(inputs.data() + start * stride, m * stride, chunk.data());
    const nn::Var h = stage.forward_prefix(nn::Var::constant(std::move(chunk)), stage.layer_count() - 1);
    const std::size_t width = h.value().size() / m;
    if (out.empty()) out = Tensor(Shape{n, width});
    std::copy_n(h.value().data(), m * width, out.data() + start * width);
  }
  return out;
}

std::array<std::vector<nn::EpochRecord>, 3> train_stages(Detector& det, std::span<const FeatureSample> train,
                                                         const std::array<nn::TrainConfig, 3>& configs,
                                                         const EpochCallback& on_epoch) {
  const auto labels = labels_of(train);
  std::array<std::vector<nn::EpochRecord>, 3> curves;
  auto cb = [&](const std::string& name) {
    return [&on_epoch, name](const nn::EpochRecord& r) {
      if (on_epoch) on_epoch(name, r);
    };
  };

  nn::Dataset d1{readings_sequence(train), labels};
  curves[0] = nn::train_classifier(det.stage1, d1, configs[0], cb("stage1"));
  const Tensor f1 = forwarded_output(det.stage1, d1.inputs, det.forwarding);
  d1 = {};

  nn::Dataset d2{stage2_inputs(train, f1), labels};
  curves[1] = nn::train_classifier(det.stage2, d2, configs[1], cb("stage2"));
  const Tensor f2 = forwarded_output(det.stage2, d2.inputs, det.forwarding);
  d2 = {};

  nn::Dataset d3{stage3_inputs(train, f2), labels};
  curves[2] = nn::train_classifier(det.stage3, d3, configs[2], cb("stage3"));
  return curves;
}

TrainedDetector train_pipeline(std::span<const FeatureSample> train, const std::array<nn::TrainConfig, 3>& configs,
                               Forwarding forwarding, std::string normalizer_fingerprint,
                               const EpochCallback& on_epoch) {
  TrainedDetector out{make_detector(forwarding, configs[0].seed, std::move(normalizer_fingerprint)), {}};
  out.curves = train_stages(out.detector, train, configs, on_epoch);
  return out;
}

TrainedDetector train_pipeline(std::span<const FeatureSample> train, const nn::TrainConfig& config,
                               Forwarding forwarding, std::string normalizer_fingerprint,
                               const EpochCallback& on_epoch) {
  return train_pipeline(train, std::array<nn::TrainConfig, 3>{config, config, config}, forwarding,
                        std::move(normalizer_fingerprint), on_epoch);
}

Tensor predict(const Detector& det, std::span<const FeatureSample> samples, int stage,
               const std::string& normalizer_fingerprint) {
  if (stage < 1 || stage > 3) throw UsageError("stage must be 1, 2 or 3, got " + std::to_string(stage));
  if (normalizer_fingerprint != det.normalizer_fingerprint) {
    throw DataError("normalizer fingerprint " + normalizer_fingerprint + " does not match the detector's " +
                    det.normalizer_fingerprint + "; inputs are not normalized for this model");
  }
  if (samples.empty()) return Tensor{};
  const Tensor x1 = readings_sequence(samples);
  if (stage == 1) return nn::predict_batched(det.stage1, x1);
  const Tensor x2 = stage2_inputs(samples, forwarded_output(det.stage1, x1, det.forwarding));
  if (stage == 2) return nn::predict_batched(det.stage2, x2);
  const Tensor x3 = stage3_inputs(samples, forwarded_output(det.stage2, x2, det.forwarding));
  return nn::predict_batched(det.stage3, x3);
}

std::array<double, 2> predict_one(const Detector& det, const FeatureSample& sample, int stage,
                                  const std::string& normalizer_fingerprint) {
  const Tensor p = predict(det, std::span<const FeatureSample>(&sample, 1), stage, normalizer_fingerprint);
  return {p[0], p[1]};
}

std::vector<double> malicious_scores(const Tensor& probs) {
  std::vector<double> out;
  if (probs.size() == 0) return out;
  out.reserve(probs.dim(0));
  for (std::size_t i = 0; i < probs.dim(0); ++i) out.push_back(probs[i * 2 + 1]);
  return out;
}

}  // namespace nmguard
