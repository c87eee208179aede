#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the production code path they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "nmguard/attacks.hpp"
#include "nmguard/nn/ops.hpp"
#include "nmguard/rng.hpp"
#include "nmguard/types.hpp"

namespace oracle {

using nmguard::Rng;
using nmguard::nn::Shape;
using nmguard::nn::Tensor;
using nmguard::nn::Var;

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

/// Max relative error between backprop and central differences of
/// L = sum(f(inputs) * R) for a fixed random projection R. The relative error
/// of one element is |a - n| / max(|a|, |n|, floor).
inline double gradient_check(const std::function<Var(const std::vector<Var>&)>& f, const std::vector<Tensor>& inputs,
                             Rng& rng, double h = 1e-5, double floor = 1e-6) {
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(Var::leaf(t, true));
  const Var out = f(leaves);
  const Tensor projection = random_tensor(out.shape(), rng);
  const Var loss = nmguard::nn::sum(nmguard::nn::mul(out, Var::constant(projection)));
  loss.backward();

  auto scalar_loss = [&](const std::vector<Tensor>& values) {
    nmguard::nn::NoGradGuard guard;
    std::vector<Var> vars;
    for (const auto& t : values) vars.push_back(Var::constant(t));
    const Var y = f(vars);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.value().size(); ++i) acc += y.value()[i] * projection[i];
    return acc;
  };

  double worst = 0.0;
  std::vector<Tensor> work = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor& analytic = leaves[k].grad();
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double x0 = work[k][i];
      work[k][i] = x0 + h;
      const double up = scalar_loss(work);
      work[k][i] = x0 - h;
      const double down = scalar_loss(work);
      work[k][i] = x0;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

/// Slot-by-slot transcription of the four attacks, replaying the documented
/// random draw order from the same substream.
inline std::vector<double> naive_attack(int id, const nmguard::DaySeries& day, const nmguard::CustomerProfile& profile,
                                        const nmguard::AttackParams& prm, Rng rng) {
  const std::vector<double>& tr = day.readings;
  const double cmax = profile.c_max;
  std::vector<double> out(tr.size());
  auto u = [&rng](const nmguard::Range& r) { return r.low + (r.high - r.low) * rng.uniform01(); };
  if (id == 1) {
    const int n = static_cast<int>(tr.size());
    const int len = prm.min_window_hours + static_cast<int>(rng.below(static_cast<std::size_t>(n - prm.min_window_hours + 1)));
    const int ts = static_cast<int>(rng.below(static_cast<std::size_t>(n - len + 1)));
    const int te = ts + len - 1;
    for (int t = 0; t < n; ++t) {
      const double x = tr[static_cast<std::size_t>(t)];
      double y = x;
      if (t >= ts && t <= te) {
        const double b = u(prm.b_range);
        const double p = u(prm.p_range);
        if (x > 0) y = b * x;
        if (x < 0) y = -std::max(p * cmax, std::fabs(x));
      }
      out[static_cast<std::size_t>(t)] = y;
    }
  } else if (id == 2 || id == 3) {
    for (std::size_t t = 0; t < tr.size(); ++t) {
      double a = prm.alpha, b = prm.beta;
      if (id == 3) {
        a = u(prm.alpha_range);
        b = u(prm.beta_range);
      }
      const double x = tr[t];
      out[t] = x > 0 ? a * x : x < 0 ? -std::min(std::fabs(b * x), cmax) : x;
    }
  } else {
    double pr = std::numeric_limits<double>::infinity();
    double nr = 0.0;
    for (std::size_t t = 0; t < tr.size(); ++t) {
      const double m1 = u(prm.m1_range);
      const double m2 = u(prm.m2_range);
      const double x = tr[t];
      if (x > 0) {
        out[t] = m1 * std::min(pr, x);
        pr = out[t];
      } else if (x < 0) {
        out[t] = -std::min(m2 * std::max(std::fabs(nr), std::fabs(x)), cmax);
        nr = out[t];
      } else {
        out[t] = x;
      }
    }
  }
  return out;
}

/// P(score_pos > score_neg) + 0.5 P(tie) over all positive/negative pairs.
inline double pairwise_auc(std::span<const nmguard::Label> labels, std::span<const double> scores) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != nmguard::Label::Malicious) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != nmguard::Label::Benign) continue;
      pairs += 1.0;
      wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

/// x_t = phi x_{t-1} + e_t with standard normal shocks.
inline std::vector<double> ar1(double phi, std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  double prev = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    prev = phi * prev + rng.normal();
    x[t] = prev;
  }
  return x;
}

// Closed-form parameter counts (kernel size 3 for conv, single-bias GRU).
constexpr std::size_t conv_params(std::size_t in, std::size_t out) { return 3 * in * out + out; }
constexpr std::size_t gru_params(std::size_t in, std::size_t h) { return 3 * h * (in + h + 1); }
constexpr std::size_t dense_params(std::size_t in, std::size_t out) { return in * out + out; }

/// A random benign-looking day: mixed signs, a few exact zeros, within -c_max.
inline nmguard::DaySeries random_day(Rng& rng, double c_max, int serial) {
  nmguard::DaySeries d;
  d.customer_id = "C" + std::to_string(rng.below(1000));
  d.date = nmguard::Date(2011, 1, 1).plus_days(serial % 3650);
  d.readings.resize(24);
  for (auto& r : d.readings) {
    const double pick = rng.uniform01();
    r = pick < 0.1 ? 0.0 : pick < 0.5 ? -rng.uniform(0.0, c_max) : rng.uniform(0.0, 4.0);
  }
  return d;
}

}  // namespace oracle
