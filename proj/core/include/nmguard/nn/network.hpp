#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nmguard/nn/layers.hpp"

namespace nmguard::nn {

/// Per-sample input geometry: steps == 0 means a flat vector of `width`.
struct InputShape {
  std::size_t steps = 0;
  std::size_t width = 0;

  Shape batched(std::size_t batch) const {
    return steps == 0 ? Shape{batch, width} : Shape{batch, steps, width};
  }
  friend bool operator==(const InputShape&, const InputShape&) = default;
};

/// Plain stack of layers ending in a softmax head.
class Network {
 public:
  Network(std::string name, InputShape input) : name_(std::move(name)), input_(input) {}

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

  const std::string& name() const { return name_; }
  const InputShape& input_shape() const { return input_; }
  std::size_t layer_count() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  Var forward(const Var& x) const { return forward_prefix(x, layers_.size()); }
  /// Output of the first `count` layers.
  Var forward_prefix(const Var& x, std::size_t count) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;
  std::vector<LayerSpec> specs() const;

  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> values);

 private:
  std::string name_;
  InputShape input_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Instantiates layers in order, inferring each layer's input width. Sequence
/// layers that feed a Dense layer are flattened (Conv1D) or must return only
/// their final state (GRU).
Network build_network(std::string name, InputShape input, std::span<const LayerSpec> layers,
                      Rng& rng, Init init = Init::Glorot);

}  // namespace nmguard::nn
