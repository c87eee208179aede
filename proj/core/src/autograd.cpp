#include "nmguard/nn/autograd.hpp"

#include <unordered_set>

#include "nmguard/error.hpp"

namespace nmguard::nn {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = "constant";
  return Var(std::move(node));
}

Var Var::leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->op = "leaf";
  return Var(std::move(node));
}

const Tensor& Var::value() const {
  if (!node_) throw UsageError("Var has no value: forward has not been run");
  return node_->value;
}

Tensor& Var::mutable_value() {
  if (!node_) throw UsageError("Var has no value: forward has not been run");
  return node_->value;
}

const Tensor& Var::grad() const {
  if (!node_) throw UsageError("Var has no value: forward has not been run");
  return node_->grad_buffer();
}

void Var::zero_grad() {
  if (node_) node_->grad_buffer().fill(0.0);
}

void Var::backward() const {
  if (!node_) throw UsageError("backward called before forward");
  if (node_->value.size() != 1) {
    throw UsageError("backward needs a single-element value, got shape " +
                     shape_str(node_->value.shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node* child = n->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Var make_result(std::string op, Tensor value, std::vector<Var> inputs,
                std::function<void(Node&)> backward_fn) {
  if (!value.all_finite()) {
    throw DivergenceError("non-finite value produced by " + op + " (shape " +
                          shape_str(value.shape()) + ")");
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = std::move(op);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.node());
    node->backward_fn = std::move(backward_fn);
  }
  return Var(std::move(node));
}

}  // namespace nmguard::nn
