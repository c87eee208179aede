#include "nmguard/nn/layers.hpp"

#include <cmath>

#include "nmguard/error.hpp"

namespace nmguard::nn {

namespace {

Parameter make_param(std::string name, Shape shape, double fan_in, double fan_out, Init init,
                     Rng& rng) {
  Tensor t(std::move(shape), 0.0);
  if (init == Init::Glorot) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : t.values()) v = rng.uniform(-limit, limit);
  }
  return Parameter{std::move(name), Var::leaf(std::move(t), true)};
}

Parameter make_bias(std::string name, std::size_t n) {
  return Parameter{std::move(name), Var::leaf(Tensor(Shape{n}, 0.0), true)};
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "Dense";
    case LayerKind::Conv1D: return "Conv1D";
    case LayerKind::Gru: return "GRU";
    case LayerKind::Flatten: return "Flatten";
  }
  return "Dense";
}

Dense::Dense(std::size_t in, std::size_t units, Activation act, Rng& rng, Init init)
    : in_(in),
      units_(units),
      act_(act),
      weight_(make_param("weight", {in, units}, double(in), double(units), init, rng)),
      bias_(make_bias("bias", units)) {}

Var Dense::forward(const Var& x) const {
  if (x.shape().back() != in_) {
    throw UsageError("Dense: expected input width " + std::to_string(in_) + ", got shape " +
                     shape_str(x.shape()));
  }
  return activate(affine(x, weight_.var, bias_.var), act_);
}

Conv1D::Conv1D(std::size_t in_channels, std::size_t filters, Activation act, Rng& rng, Init init)
    : in_(in_channels),
      filters_(filters),
      act_(act),
      kernel_(make_param("kernel", {3 * in_channels, filters}, 3.0 * double(in_channels),
                         3.0 * double(filters), init, rng)),
      bias_(make_bias("bias", filters)) {}

Var Conv1D::forward(const Var& x) const {
  if (x.shape().size() != 3 || x.shape()[2] != in_) {
    throw UsageError("Conv1D: expected [B, T, " + std::to_string(in_) + "], got shape " +
                     shape_str(x.shape()));
  }
  return activate(conv1d(x, kernel_.var, bias_.var), act_);
}

Gru::Gru(std::size_t in, std::size_t units, Activation candidate, bool return_sequences, Rng& rng,
         Init init)
    : in_(in),
      units_(units),
      candidate_(candidate),
      return_sequences_(return_sequences),
      input_weight_(make_param("input_weight", {in, 3 * units}, double(in), 3.0 * double(units),
                               init, rng)),
      recurrent_weight_(make_param("recurrent_weight", {units, 3 * units}, double(units),
                                   3.0 * double(units), init, rng)),
      bias_(make_bias("bias", 3 * units)) {}

Var Gru::forward(const Var& x) const {
  if (x.shape().size() != 3 || x.shape()[2] != in_) {
    throw UsageError("GRU: expected [B, T, " + std::to_string(in_) + "], got shape " +
                     shape_str(x.shape()));
  }
  return gru(x, input_weight_.var, recurrent_weight_.var, bias_.var, candidate_, return_sequences_);
}

Var Flatten::forward(const Var& x) const {
  const Shape& s = x.shape();
  if (s.size() != 3 || s[1] * s[2] != width_) {
    throw UsageError("Flatten: expected [B, T, C] with T*C = " + std::to_string(width_) +
                     ", got " + shape_str(s));
  }
  return reshape(x, {s[0], width_});
}

}  // namespace nmguard::nn
