#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nmguard/nn/network.hpp"
#include "nmguard/nn/optim.hpp"
#include "nmguard/types.hpp"

namespace nmguard::nn {

struct TrainConfig {
  std::size_t batch_size = 64;
  int max_epochs = 100;
  int patience = 10;
  double validation_fraction = 0.1;
  AdamConfig adam;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

/// Inputs stacked along the first dimension, one label per row.
struct Dataset {
  Tensor inputs;
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
};

/// Rows `indices` of a batched tensor.
Tensor gather_rows(const Tensor& batched, std::span<const std::size_t> indices);

/// One-hot [B, 2] targets, column 1 = malicious.
Tensor one_hot(std::span<const Label> labels);

/// Minibatch Adam on cross-entropy with early stopping on a held-out slice of
/// the data. The best-validation weights are restored before returning. On a
/// non-finite loss the best weights so far are restored and DivergenceError is
/// thrown.
std::vector<EpochRecord> train_classifier(Network& net, const Dataset& data, const TrainConfig& cfg,
                                          const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Softmax outputs [N, 2] without recording a graph.
Tensor predict_batched(const Network& net, const Tensor& inputs, std::size_t batch_size = 256);

/// Mean cross-entropy of `net` on `data`.
double evaluate_loss(const Network& net, const Dataset& data, std::size_t batch_size = 256);

}  // namespace nmguard::nn
