#include "nmguard/nn/optim.hpp"

#include <cmath>

#include "nmguard/error.hpp"

namespace nmguard::nn {

void adam_step(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, const AdamConfig& cfg,
               std::int64_t t) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
    throw UsageError("adam_step: buffer size mismatch for parameter " + shape_str(param.shape()));
  }
  if (t < 1) throw UsageError("adam_step: step counter must start at 1");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    param[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
  }
}

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  for (auto* p : params_) {
    m_.emplace_back(p->value().shape(), 0.0);
    v_.emplace_back(p->value().shape(), 0.0);
  }
}

void Adam::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

void Adam::step() {
  ++t_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    adam_step(params_[i]->value(), params_[i]->grad(), m_[i], v_[i], cfg_, t_);
  }
}

}  // namespace nmguard::nn
