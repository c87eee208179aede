#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nmguard/nn/ops.hpp"
#include "nmguard/rng.hpp"

namespace nmguard::nn {

/// Trainable tensor with a persistent graph leaf; gradients accumulate across
/// backward passes until zero_grad.
struct Parameter {
  std::string name;
  Var var;

  Tensor& value() { return var.mutable_value(); }
  const Tensor& value() const { return var.value(); }
  const Tensor& grad() const { return var.grad(); }
  void zero_grad() { var.zero_grad(); }
};

enum class LayerKind { Dense, Conv1D, Gru, Flatten };

std::string_view to_string(LayerKind kind);

/// What a layer is, independent of its weights. Used for architecture checks
/// and checkpoint manifests.
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  std::size_t units = 0;
  Activation activation = Activation::Linear;
  bool return_sequences = false;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

enum class Init { Glorot, Zeros };

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Var forward(const Var& x) const = 0;
  virtual std::vector<Parameter*> parameters() = 0;
  virtual LayerSpec spec() const = 0;
  virtual std::size_t input_width() const = 0;
};

class Dense final : public Layer {
 public:
  Dense(std::size_t in, std::size_t units, Activation act, Rng& rng, Init init = Init::Glorot);
  Var forward(const Var& x) const override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  LayerSpec spec() const override { return {LayerKind::Dense, units_, act_, false}; }
  std::size_t input_width() const override { return in_; }

 private:
  std::size_t in_, units_;
  Activation act_;
  Parameter weight_, bias_;
};

/// Kernel size 3, stride 1, same padding.
class Conv1D final : public Layer {
 public:
  Conv1D(std::size_t in_channels, std::size_t filters, Activation act, Rng& rng,
         Init init = Init::Glorot);
  Var forward(const Var& x) const override;
  std::vector<Parameter*> parameters() override { return {&kernel_, &bias_}; }
  LayerSpec spec() const override { return {LayerKind::Conv1D, filters_, act_, true}; }
  std::size_t input_width() const override { return in_; }

 private:
  std::size_t in_, filters_;
  Activation act_;
  Parameter kernel_, bias_;
};

/// Sigmoid update/reset gates; `candidate` is the listed layer activation.
class Gru final : public Layer {
 public:
  Gru(std::size_t in, std::size_t units, Activation candidate, bool return_sequences, Rng& rng,
      Init init = Init::Glorot);
  Var forward(const Var& x) const override;
  std::vector<Parameter*> parameters() override { return {&input_weight_, &recurrent_weight_, &bias_}; }
  LayerSpec spec() const override { return {LayerKind::Gru, units_, candidate_, return_sequences_}; }
  std::size_t input_width() const override { return in_; }

 private:
  std::size_t in_, units_;
  Activation candidate_;
  bool return_sequences_;
  Parameter input_weight_, recurrent_weight_, bias_;
};

/// [B, T, C] -> [B, T * C].
class Flatten final : public Layer {
 public:
  explicit Flatten(std::size_t width) : width_(width) {}
  Var forward(const Var& x) const override;
  std::vector<Parameter*> parameters() override { return {}; }
  LayerSpec spec() const override { return {LayerKind::Flatten, width_, Activation::Linear, false}; }
  std::size_t input_width() const override { return width_; }

 private:
  std::size_t width_;
};

}  // namespace nmguard::nn
