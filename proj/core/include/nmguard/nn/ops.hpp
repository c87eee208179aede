#pragma once

#include <string_view>

#include "nmguard/nn/autograd.hpp"

namespace nmguard::nn {

enum class Activation { Linear, Relu, Sigmoid, Tanh, Elu, Softmax };

std::string_view to_string(Activation act);
Activation parse_activation(std::string_view name);

// Elementwise arithmetic. Shapes must match exactly.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);
Var square(const Var& a);
Var sum(const Var& a);
Var mean(const Var& a);

// Activations. softmax normalizes over the last dimension.
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
Var elu(const Var& x);
Var softmax(const Var& x);
Var activate(const Var& x, Activation act);

/// x[..., K] * w[K, N] + b[N]; leading dimensions of x are treated as rows.
Var affine(const Var& x, const Var& w, const Var& b);

/// Kernel-3, stride-1, zero-padded ("same") cross-correlation.
/// x: [B, T, Cin]; kernel: [3 * Cin, Cout] with tap-major rows; bias: [Cout].
Var conv1d(const Var& x, const Var& kernel, const Var& bias);

/// Gated recurrent unit over x: [B, T, C] with zero initial state.
///   z = sigmoid(x Wz + h Uz + bz)
///   r = sigmoid(x Wr + h Ur + br)
///   c = act(x Wc + (r * h) Uc + bc)
///   h' = z * h + (1 - z) * c
/// w: [C, 3H], u: [H, 3H], b: [3H], gate blocks ordered (z, r, c).
/// Returns [B, T, H] when return_sequences, else the final state [B, H].
Var gru(const Var& x, const Var& w, const Var& u, const Var& b, Activation candidate,
        bool return_sequences);

/// Mean over the batch of -sum_c y(c) log(p(c)); p clamped to [1e-12, 1 - 1e-12].
/// targets: one-hot [B, N]; probs: [B, N] rows summing to 1.
Var cross_entropy(const Tensor& targets, const Var& probs);

Var reshape(const Var& x, Shape shape);

/// Concatenates along the last dimension; leading dimensions must match.
Var concat_last(const Var& a, const Var& b);

/// [B, C] -> [B, steps, C] by repeating each row.
Var broadcast_steps(const Var& x, std::size_t steps);

}  // namespace nmguard::nn
