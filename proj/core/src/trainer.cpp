#include "nmguard/nn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nmguard/error.hpp"
#include "nmguard/rng.hpp"

namespace nmguard::nn {

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::vector<Label> pick_labels(std::span<const Label> labels, std::span<const std::size_t> idx) {
  std::vector<Label> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(labels[i]);
  return out;
}

double loss_on(const Network& net, const Tensor& inputs, std::span<const Label> labels,
               std::span<const std::size_t> idx, std::size_t batch_size) {
  NoGradGuard guard;
  double total = 0.0;
  for (std::size_t start = 0; start < idx.size(); start += batch_size) {
    const auto chunk = idx.subspan(start, std::min(batch_size, idx.size() - start));
    const Var probs = net.forward(Var::constant(gather_rows(inputs, chunk)));
    const auto chunk_labels = pick_labels(labels, chunk);
    const Var loss = cross_entropy(one_hot(chunk_labels), probs);
    total += loss.value()[0] * static_cast<double>(chunk.size());
  }
  return idx.empty() ? 0.0 : total / static_cast<double>(idx.size());
}

}  // namespace

Tensor gather_rows(const Tensor& batched, std::span<const std::size_t> indices) {
  const std::size_t n = batched.dim(0);
  const std::size_t stride = batched.size() / n;
  Shape shape = batched.shape();
  shape[0] = indices.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= n) throw UsageError("gather_rows: index out of range");
    std::copy_n(batched.data() + indices[i] * stride, stride, out.data() + i * stride);
  }
  return out;
}

Tensor one_hot(std::span<const Label> labels) {
  Tensor t(Shape{labels.size(), 2}, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    t[i * 2 + (labels[i] == Label::Malicious ? 1 : 0)] = 1.0;
  }
  return t;
}

std::vector<EpochRecord> train_classifier(Network& net, const Dataset& data, const TrainConfig& cfg,
                                          const std::function<void(const EpochRecord&)>& on_epoch) {
  if (data.size() == 0 || data.inputs.dim(0) != data.size()) {
    throw UsageError(net.name() + ": training set is empty or inputs/labels disagree");
  }
  if (cfg.batch_size == 0 || cfg.max_epochs < 1) throw UsageError("batch_size and max_epochs must be positive");

  Rng rng = Rng::derive(cfg.seed, {fnv1a64(net.name()), 0x7472616eULL});
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);
  auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * double(data.size())));
  if (n_val >= data.size()) n_val = data.size() - 1;
  std::vector<std::size_t> val(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());

  Adam opt(net.parameters(), cfg.adam);
  std::vector<EpochRecord> curve;
  std::vector<double> best = net.flat_parameters();
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(train, rng);
    double running = 0.0;
    for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
      const auto chunk = std::span<const std::size_t>(train).subspan(
          start, std::min(cfg.batch_size, train.size() - start));
      try {
        opt.zero_grad();
        const Var probs = net.forward(Var::constant(gather_rows(data.inputs, chunk)));
        const auto labels = pick_labels(data.labels, chunk);
        const Var loss = cross_entropy(one_hot(labels), probs);
        if (!std::isfinite(loss.value()[0])) throw DivergenceError("non-finite loss");
        loss.backward();
        opt.step();
        running += loss.value()[0] * static_cast<double>(chunk.size());
      } catch (const DivergenceError& e) {
        net.set_flat_parameters(best);
        throw DivergenceError(net.name() + ": training diverged at epoch " + std::to_string(epoch) +
                              ", sample offset " + std::to_string(start) + " (" + e.what() +
                              "); best weights restored");
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = running / static_cast<double>(train.size());
    rec.validation_loss = val.empty() ? rec.train_loss
                                      : loss_on(net, data.inputs, data.labels, val, 256);
    curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.validation_loss < best_loss) {
      best_loss = rec.validation_loss;
      best = net.flat_parameters();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  net.set_flat_parameters(best);
  return curve;
}

Tensor predict_batched(const Network& net, const Tensor& inputs, std::size_t batch_size) {
  NoGradGuard guard;
  const std::size_t n = inputs.dim(0);
  Tensor out(Shape{n, 2});
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t start = 0; start < n; start += batch_size) {
    const auto chunk = std::span<const std::size_t>(idx).subspan(start, std::min(batch_size, n - start));
    const Var probs = net.forward(Var::constant(gather_rows(inputs, chunk)));
    std::copy_n(probs.value().data(), chunk.size() * 2, out.data() + start * 2);
  }
  return out;
}

double evaluate_loss(const Network& net, const Dataset& data, std::size_t batch_size) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return loss_on(net, data.inputs, data.labels, idx, batch_size);
}

}  // namespace nmguard::nn
