#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nmguard/nn/tensor.hpp"

namespace nmguard::nn {

/// One value in a computation graph. Ops allocate nodes; backward_fn pushes
/// this node's gradient into the gradients of `inputs`.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::string op;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  /// Zero-filled gradient buffer shaped like value, allocated on first use.
  Tensor& grad_buffer();
};

/// Handle to a graph node. A default-constructed Var has no value yet.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Tensor value);
  static Var leaf(Tensor value, bool requires_grad = true);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const;
  Tensor& mutable_value();
  const Tensor& grad() const;
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Shape& shape() const { return value().shape(); }
  const std::shared_ptr<Node>& node() const { return node_; }

  void zero_grad();

  /// Reverse-mode sweep from a single-element value. Gradients accumulate into
  /// every reachable node with requires_grad.
  void backward() const;

 private:
  std::shared_ptr<Node> node_;
};

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Builds an op node: records inputs and backward_fn only when recording is on
/// and some input needs a gradient. Throws DivergenceError on non-finite output.
Var make_result(std::string op, Tensor value, std::vector<Var> inputs,
                std::function<void(Node&)> backward_fn);

}  // namespace nmguard::nn
