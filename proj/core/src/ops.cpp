#include "nmguard/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "nmguard/error.hpp"

namespace nmguard::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

constexpr double kProbEpsilon = 1e-12;

ConstMatMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MatMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw UsageError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

bool wants_grad(Node& self, std::size_t i) { return self.inputs[i]->requires_grad; }

template <typename Forward, typename Derivative>
Var unary(const char* op, const Var& x, Forward f, Derivative d) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return make_result(op, std::move(out), {x}, [d](Node& self) {
    Node& a = input(self, 0);
    Tensor& ga = a.grad_buffer();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * d(a.value[i], self.value[i]);
  });
}

double sigmoid_scalar(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double apply_act(Activation act, double v) {
  switch (act) {
    case Activation::Linear: return v;
    case Activation::Relu: return v > 0.0 ? v : 0.0;
    case Activation::Sigmoid: return sigmoid_scalar(v);
    case Activation::Tanh: return std::tanh(v);
    case Activation::Elu: return v > 0.0 ? v : std::expm1(v);
    case Activation::Softmax: break;
  }
  throw UsageError("softmax is not an elementwise activation");
}

// Derivative expressed through the activation output y.
double act_grad_from_output(Activation act, double y) {
  switch (act) {
    case Activation::Linear: return 1.0;
    case Activation::Relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: return y * (1.0 - y);
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::Elu: return y > 0.0 ? 1.0 : y + 1.0;
    case Activation::Softmax: break;
  }
  throw UsageError("softmax is not an elementwise activation");
}

std::size_t leading_rows(const Shape& s) {
  std::size_t rows = 1;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) rows *= s[i];
  return rows;
}

}  // namespace

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::Linear: return "linear";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Elu: return "elu";
    case Activation::Softmax: return "softmax";
  }
  return "linear";
}

Activation parse_activation(std::string_view name) {
  for (auto a : {Activation::Linear, Activation::Relu, Activation::Sigmoid, Activation::Tanh,
                 Activation::Elu, Activation::Softmax}) {
    if (to_string(a) == name) return a;
  }
  throw UsageError("unknown activation '" + std::string(name) + "'");
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make_result("add", std::move(out), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!wants_grad(self, k)) continue;
      Tensor& g = input(self, k).grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_result("sub", std::move(out), {a, b}, [](Node& self) {
    if (wants_grad(self, 0)) {
      Tensor& g = input(self, 0).grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants_grad(self, 1)) {
      Tensor& g = input(self, 1).grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_result("mul", std::move(out), {a, b}, [](Node& self) {
    Node& na = input(self, 0);
    Node& nb = input(self, 1);
    if (na.requires_grad) {
      Tensor& g = na.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * nb.value[i];
    }
    if (nb.requires_grad) {
      Tensor& g = nb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * na.value[i];
    }
  });
}

Var scale(const Var& a, double factor) {
  return unary("scale", a, [factor](double v) { return factor * v; },
               [factor](double, double) { return factor; });
}

Var add_scalar(const Var& a, double offset) {
  return unary("add_scalar", a, [offset](double v) { return v + offset; },
               [](double, double) { return 1.0; });
}

Var square(const Var& a) {
  return unary("square", a, [](double v) { return v * v; },
               [](double x, double) { return 2.0 * x; });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return make_result("sum", Tensor::scalar(s), {a}, [](Node& self) {
    Tensor& g = input(self, 0).grad_buffer();
    const double up = self.grad[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += up;
  });
}

Var mean(const Var& a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var relu(const Var& x) { return activate(x, Activation::Relu); }
Var sigmoid(const Var& x) { return activate(x, Activation::Sigmoid); }
Var tanh(const Var& x) { return activate(x, Activation::Tanh); }
Var elu(const Var& x) { return activate(x, Activation::Elu); }

Var softmax(const Var& x) {
  const Tensor& in = x.value();
  const std::size_t cols = in.shape().back();
  const std::size_t rows = in.size() / cols;
  Tensor out(in.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = in.data() + r * cols;
    double* dst = out.data() + r * cols;
    const double mx = *std::max_element(src, src + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += dst[c] = std::exp(src[c] - mx);
    for (std::size_t c = 0; c < cols; ++c) dst[c] /= total;
  }
  return make_result("softmax", std::move(out), {x}, [rows, cols](Node& self) {
    Tensor& g = input(self, 0).grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * cols;
      const double* dy = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += dy[c] * y[c];
      double* dx = g.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) dx[c] += y[c] * (dy[c] - dot);
    }
  });
}

Var activate(const Var& x, Activation act) {
  switch (act) {
    case Activation::Linear: return x;
    case Activation::Softmax: return softmax(x);
    default: break;
  }
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = apply_act(act, in[i]);
  return make_result(std::string(to_string(act)), std::move(out), {x}, [act](Node& self) {
    Tensor& g = input(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * act_grad_from_output(act, self.value[i]);
    }
  });
}

Var affine(const Var& x, const Var& w, const Var& b) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.size() < 2 || ws.size() != 2 || xs.back() != ws[0] || b.shape() != Shape{ws[1]}) {
    throw UsageError("affine: incompatible shapes x" + shape_str(xs) + " w" + shape_str(ws) +
                     " b" + shape_str(b.shape()));
  }
  const std::size_t rows = leading_rows(xs), in = ws[0], out_cols = ws[1];
  Shape out_shape = xs;
  out_shape.back() = out_cols;
  Tensor out(out_shape);
  {
    auto y = as_matrix(out, rows, out_cols);
    y.noalias() = as_matrix(x.value(), rows, in) * as_matrix(w.value(), in, out_cols);
    y.rowwise() += Eigen::Map<const RowVec>(b.value().data(), static_cast<Eigen::Index>(out_cols));
  }
  return make_result("affine", std::move(out), {x, w, b}, [rows, in, out_cols](Node& self) {
    auto dy = as_matrix(std::as_const(self.grad), rows, out_cols);
    Node& nx = input(self, 0);
    Node& nw = input(self, 1);
    Node& nb = input(self, 2);
    if (nx.requires_grad) {
      as_matrix(nx.grad_buffer(), rows, in).noalias() +=
          dy * as_matrix(std::as_const(nw.value), in, out_cols).transpose();
    }
    if (nw.requires_grad) {
      as_matrix(nw.grad_buffer(), in, out_cols).noalias() +=
          as_matrix(std::as_const(nx.value), rows, in).transpose() * dy;
    }
    if (nb.requires_grad) {
      Eigen::Map<RowVec>(nb.grad_buffer().data(), static_cast<Eigen::Index>(out_cols)) +=
          dy.colwise().sum();
    }
  });
}

Var conv1d(const Var& x, const Var& kernel, const Var& bias) {
  const Shape& xs = x.shape();
  const Shape& ks = kernel.shape();
  if (xs.size() != 3 || ks.size() != 2 || ks[0] != 3 * xs[2] || bias.shape() != Shape{ks[1]}) {
    throw UsageError("conv1d: incompatible shapes x" + shape_str(xs) + " kernel" + shape_str(ks) +
                     " bias" + shape_str(bias.shape()));
  }
  const std::size_t batch = xs[0], steps = xs[1], cin = xs[2], cout = ks[1];
  const std::size_t rows = batch * steps, width = 3 * cin;

  // im2col: row (b, t) holds x[b, t-1], x[b, t], x[b, t+1] with zero padding.
  auto col = std::make_shared<Tensor>(Shape{rows, width}, 0.0);
  const double* src = x.value().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      double* dst = col->data() + (b * steps + t) * width;
      for (std::size_t k = 0; k < 3; ++k) {
        const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(k) - 1;
        if (s < 0 || s >= static_cast<std::ptrdiff_t>(steps)) continue;
        std::copy_n(src + (b * steps + static_cast<std::size_t>(s)) * cin, cin, dst + k * cin);
      }
    }
  }

  Tensor out(Shape{batch, steps, cout});
  {
    auto y = as_matrix(out, rows, cout);
    y.noalias() = as_matrix(std::as_const(*col), rows, width) *
                  as_matrix(kernel.value(), width, cout);
    y.rowwise() += Eigen::Map<const RowVec>(bias.value().data(), static_cast<Eigen::Index>(cout));
  }
  return make_result("conv1d", std::move(out), {x, kernel, bias},
                     [col, batch, steps, cin, cout, rows, width](Node& self) {
    auto dy = as_matrix(std::as_const(self.grad), rows, cout);
    Node& nx = input(self, 0);
    Node& nk = input(self, 1);
    Node& nb = input(self, 2);
    if (nk.requires_grad) {
      as_matrix(nk.grad_buffer(), width, cout).noalias() +=
          as_matrix(std::as_const(*col), rows, width).transpose() * dy;
    }
    if (nb.requires_grad) {
      Eigen::Map<RowVec>(nb.grad_buffer().data(), static_cast<Eigen::Index>(cout)) +=
          dy.colwise().sum();
    }
    if (nx.requires_grad) {
      RowMat dcol = dy * as_matrix(std::as_const(nk.value), width, cout).transpose();
      double* dx = nx.grad_buffer().data();
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t t = 0; t < steps; ++t) {
          const double* row = dcol.data() + (b * steps + t) * width;
          for (std::size_t k = 0; k < 3; ++k) {
            const std::ptrdiff_t s =
                static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(k) - 1;
            if (s < 0 || s >= static_cast<std::ptrdiff_t>(steps)) continue;
            double* d = dx + (b * steps + static_cast<std::size_t>(s)) * cin;
            for (std::size_t c = 0; c < cin; ++c) d[c] += row[k * cin + c];
          }
        }
      }
    }
  });
}

namespace {

// Saved activations of one GRU forward pass, laid out step-major: [T][B, H].
struct GruTape {
  std::size_t batch = 0, steps = 0, in = 0, hidden = 0;
  Activation candidate = Activation::Tanh;
  bool return_sequences = false;
  std::vector<double> h;  // T + 1 states, h[0] = 0
  std::vector<double> z;
  std::vector<double> r;
  std::vector<double> c;

  double* state(std::size_t t) { return h.data() + t * batch * hidden; }
  double* gate(std::vector<double>& g, std::size_t t) { return g.data() + t * batch * hidden; }
};

}  // namespace

Var gru(const Var& x, const Var& w, const Var& u, const Var& b, Activation candidate,
        bool return_sequences) {
  const Shape& xs = x.shape();
  if (xs.size() != 3 || w.shape().size() != 2 || w.shape()[0] != xs[2] || w.shape()[1] % 3 != 0) {
    throw UsageError("gru: incompatible shapes x" + shape_str(xs) + " w" + shape_str(w.shape()));
  }
  const std::size_t hidden = w.shape()[1] / 3;
  if (u.shape() != Shape{hidden, 3 * hidden} || b.shape() != Shape{3 * hidden}) {
    throw UsageError("gru: incompatible shapes u" + shape_str(u.shape()) + " b" +
                     shape_str(b.shape()) + " for hidden size " + std::to_string(hidden));
  }
  if (candidate == Activation::Softmax) throw UsageError("gru: softmax candidate activation");

  auto tape = std::make_shared<GruTape>();
  tape->batch = xs[0];
  tape->steps = xs[1];
  tape->in = xs[2];
  tape->hidden = hidden;
  tape->candidate = candidate;
  tape->return_sequences = return_sequences;
  const std::size_t B = tape->batch, T = tape->steps, C = tape->in, H = hidden;
  const auto iB = static_cast<Eigen::Index>(B), iH = static_cast<Eigen::Index>(H);
  tape->h.assign((T + 1) * B * H, 0.0);
  tape->z.resize(T * B * H);
  tape->r.resize(T * B * H);
  tape->c.resize(T * B * H);

  // Input projections for every (b, t) row at once.
  RowMat xw = as_matrix(x.value(), B * T, C) * as_matrix(w.value(), C, 3 * H);
  xw.rowwise() += Eigen::Map<const RowVec>(b.value().data(), static_cast<Eigen::Index>(3 * H));
  const auto uall = as_matrix(u.value(), H, 3 * H);
  const auto u_zr = uall.leftCols(2 * iH);
  const auto u_c = uall.rightCols(iH);

  RowMat gates(iB, 3 * iH);
  RowMat rh(iB, iH);
  for (std::size_t t = 0; t < T; ++t) {
    ConstStridedMap xw_t(xw.data() + t * 3 * H, iB, 3 * iH,
                         Eigen::OuterStride<>(static_cast<Eigen::Index>(T * 3 * H)));
    ConstMatMap h_prev(tape->state(t), iB, iH);
    gates = xw_t;
    gates.leftCols(2 * iH).noalias() += h_prev * u_zr;
    double* z = tape->gate(tape->z, t);
    double* r = tape->gate(tape->r, t);
    double* c = tape->gate(tape->c, t);
    for (std::size_t i = 0; i < B; ++i) {
      for (std::size_t j = 0; j < H; ++j) {
        z[i * H + j] = sigmoid_scalar(gates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        r[i * H + j] =
            sigmoid_scalar(gates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(H + j)));
      }
    }
    rh = ConstMatMap(r, iB, iH).cwiseProduct(h_prev);
    gates.rightCols(iH).noalias() += rh * u_c;
    double* h_next = tape->state(t + 1);
    const double* hp = tape->state(t);
    for (std::size_t i = 0; i < B; ++i) {
      for (std::size_t j = 0; j < H; ++j) {
        const std::size_t k = i * H + j;
        c[k] = apply_act(candidate,
                         gates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 * H + j)));
        h_next[k] = z[k] * hp[k] + (1.0 - z[k]) * c[k];
      }
    }
  }

  Tensor out;
  if (return_sequences) {
    out = Tensor(Shape{B, T, H});
    for (std::size_t t = 0; t < T; ++t) {
      const double* hs = tape->state(t + 1);
      for (std::size_t i = 0; i < B; ++i) {
        std::copy_n(hs + i * H, H, out.data() + (i * T + t) * H);
      }
    }
  } else {
    out = Tensor(Shape{B, H}, std::vector<double>(tape->state(T), tape->state(T) + B * H));
  }

  return make_result("gru", std::move(out), {x, w, u, b}, [tape](Node& self) {
    GruTape& tp = *tape;
    const std::size_t B = tp.batch, T = tp.steps, C = tp.in, H = tp.hidden;
    const auto iB = static_cast<Eigen::Index>(B), iH = static_cast<Eigen::Index>(H);
    Node& nx = input(self, 0);
    Node& nw = input(self, 1);
    Node& nu = input(self, 2);
    Node& nb = input(self, 3);
    const auto uall = as_matrix(std::as_const(nu.value), H, 3 * H);
    const auto u_zr = uall.leftCols(2 * iH);
    const auto u_c = uall.rightCols(iH);

    RowMat du = RowMat::Zero(iH, 3 * iH);
    RowMat dxw(static_cast<Eigen::Index>(B * T), 3 * iH);
    RowMat dh_next = RowMat::Zero(iB, iH);
    if (!tp.return_sequences) dh_next = as_matrix(std::as_const(self.grad), B, H);
    RowMat dgates(iB, 3 * iH);
    RowMat dhp(iB, iH);
    RowMat rh(iB, iH);
    RowMat drh(iB, iH);

    for (std::size_t t = T; t-- > 0;) {
      if (tp.return_sequences) {
        for (std::size_t i = 0; i < B; ++i) {
          const double* g = self.grad.data() + (i * T + t) * H;
          for (std::size_t j = 0; j < H; ++j) {
            dh_next(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += g[j];
          }
        }
      }
      const double* z = tp.gate(tp.z, t);
      const double* r = tp.gate(tp.r, t);
      const double* c = tp.gate(tp.c, t);
      const double* hp = tp.state(t);
      for (std::size_t i = 0; i < B; ++i) {
        for (std::size_t j = 0; j < H; ++j) {
          const std::size_t k = i * H + j;
          const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
          const double dh = dh_next(ii, jj);
          const double dz = dh * (hp[k] - c[k]);
          const double dc = dh * (1.0 - z[k]);
          dhp(ii, jj) = dh * z[k];
          dgates(ii, 2 * iH + jj) = dc * act_grad_from_output(tp.candidate, c[k]);
          dgates(ii, jj) = dz * z[k] * (1.0 - z[k]);
          rh(ii, jj) = r[k] * hp[k];
        }
      }
      ConstMatMap h_prev(hp, iB, iH);
      du.rightCols(iH).noalias() += rh.transpose() * dgates.rightCols(iH);
      drh.noalias() = dgates.rightCols(iH) * u_c.transpose();
      for (std::size_t i = 0; i < B; ++i) {
        for (std::size_t j = 0; j < H; ++j) {
          const std::size_t k = i * H + j;
          const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
          const double dr = drh(ii, jj) * hp[k];
          dhp(ii, jj) += drh(ii, jj) * r[k];
          dgates(ii, iH + jj) = dr * r[k] * (1.0 - r[k]);
        }
      }
      du.leftCols(2 * iH).noalias() += h_prev.transpose() * dgates.leftCols(2 * iH);
      dhp.noalias() += dgates.leftCols(2 * iH) * u_zr.transpose();
      StridedMap(dxw.data() + t * 3 * H, iB, 3 * iH,
                 Eigen::OuterStride<>(static_cast<Eigen::Index>(T * 3 * H))) = dgates;
      dh_next.swap(dhp);
    }

    if (nu.requires_grad) as_matrix(nu.grad_buffer(), H, 3 * H) += du;
    if (nb.requires_grad) {
      Eigen::Map<RowVec>(nb.grad_buffer().data(), static_cast<Eigen::Index>(3 * H)) +=
          dxw.colwise().sum();
    }
    if (nw.requires_grad) {
      as_matrix(nw.grad_buffer(), C, 3 * H).noalias() +=
          as_matrix(std::as_const(nx.value), B * T, C).transpose() * dxw;
    }
    if (nx.requires_grad) {
      as_matrix(nx.grad_buffer(), B * T, C).noalias() +=
          dxw * as_matrix(std::as_const(nw.value), C, 3 * H).transpose();
    }
  });
}

Var cross_entropy(const Tensor& targets, const Var& probs) {
  const Shape& ps = probs.shape();
  if (ps.size() != 2 || targets.shape() != ps) {
    throw UsageError("cross_entropy: shape mismatch targets" + shape_str(targets.shape()) +
                     " probs" + shape_str(ps));
  }
  const std::size_t rows = ps[0], cols = ps[1];
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    int ones = 0;
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double y = targets[r * cols + c];
      if (y == 1.0) {
        ++ones;
      } else if (y != 0.0) {
        ones = -1;
        break;
      }
      total += probs.value()[r * cols + c];
    }
    if (ones != 1) throw UsageError("cross_entropy: target row " + std::to_string(r) + " is not one-hot");
    if (std::abs(total - 1.0) > 1e-6) {
      throw UsageError("cross_entropy: prediction row " + std::to_string(r) + " sums to " +
                       std::to_string(total));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const double y = targets[r * cols + c];
      if (y != 0.0) {
        const double p = std::clamp(probs.value()[r * cols + c], kProbEpsilon, 1.0 - kProbEpsilon);
        loss -= y * std::log(p);
      }
    }
  }
  loss /= static_cast<double>(rows);
  return make_result("cross_entropy", Tensor::scalar(loss), {probs},
                     [targets, rows, cols](Node& self) {
    Node& np = input(self, 0);
    Tensor& g = np.grad_buffer();
    const double up = self.grad[0] / static_cast<double>(rows);
    for (std::size_t i = 0; i < rows * cols; ++i) {
      if (targets[i] == 0.0) continue;
      const double p = std::clamp(np.value[i], kProbEpsilon, 1.0 - kProbEpsilon);
      g[i] -= up * targets[i] / p;
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return make_result("reshape", std::move(out), {x}, [](Node& self) {
    Tensor& g = input(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var concat_last(const Var& a, const Var& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() != bs.size() || !std::equal(as.begin(), as.end() - 1, bs.begin())) {
    throw UsageError("concat_last: incompatible shapes " + shape_str(as) + " and " + shape_str(bs));
  }
  const std::size_t rows = leading_rows(as), ca = as.back(), cb = bs.back();
  Shape out_shape = as;
  out_shape.back() = ca + cb;
  Tensor out(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.value().data() + r * ca, ca, out.data() + r * (ca + cb));
    std::copy_n(b.value().data() + r * cb, cb, out.data() + r * (ca + cb) + ca);
  }
  return make_result("concat_last", std::move(out), {a, b}, [rows, ca, cb](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!wants_grad(self, k)) continue;
      Tensor& g = input(self, k).grad_buffer();
      const std::size_t width = k == 0 ? ca : cb, offset = k == 0 ? 0 : ca;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < width; ++c) g[r * width + c] += self.grad[r * (ca + cb) + offset + c];
      }
    }
  });
}

Var broadcast_steps(const Var& x, std::size_t steps) {
  const Shape& xs = x.shape();
  if (xs.size() != 2 || steps == 0) {
    throw UsageError("broadcast_steps: expected [B, C], got " + shape_str(xs));
  }
  const std::size_t batch = xs[0], cols = xs[1];
  Tensor out(Shape{batch, steps, cols});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      std::copy_n(x.value().data() + b * cols, cols, out.data() + (b * steps + t) * cols);
    }
  }
  return make_result("broadcast_steps", std::move(out), {x}, [batch, steps, cols](Node& self) {
    Tensor& g = input(self, 0).grad_buffer();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t c = 0; c < cols; ++c) g[b * cols + c] += self.grad[(b * steps + t) * cols + c];
      }
    }
  });
}

}  // namespace nmguard::nn
