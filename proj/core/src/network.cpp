#include "nmguard/nn/network.hpp"

#include "nmguard/error.hpp"

namespace nmguard::nn {

Var Network::forward_prefix(const Var& x, std::size_t count) const {
  const Shape& s = x.shape();
  if (s.empty() || s != input_.batched(s[0])) {
    throw UsageError(name_ + ": expected input " + shape_str(input_.batched(s.empty() ? 1 : s[0])) +
                     ", got " + shape_str(s));
  }
  Var h = x;
  for (std::size_t i = 0; i < count && i < layers_.size(); ++i) h = layers_[i]->forward(h);
  return h;
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    for (auto* p : l->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<const Parameter*> Network::parameters() const {
  std::vector<const Parameter*> out;
  for (auto& l : layers_) {
    for (auto* p : l->parameters()) out.push_back(p);
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value().size();
  return n;
}

std::vector<LayerSpec> Network::specs() const {
  std::vector<LayerSpec> out;
  for (auto& l : layers_) out.push_back(l->spec());
  return out;
}

std::vector<double> Network::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto* p : parameters()) {
    out.insert(out.end(), p->value().values().begin(), p->value().values().end());
  }
  return out;
}

void Network::set_flat_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw DataError(name_ + ": expected " + std::to_string(parameter_count()) +
                    " parameters, got " + std::to_string(values.size()));
  }
  std::size_t offset = 0;
  for (auto* p : parameters()) {
    auto dst = p->value().values();
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), dst.size(), dst.begin());
    offset += dst.size();
  }
}

Network build_network(std::string name, InputShape input, std::span<const LayerSpec> layers,
                      Rng& rng, Init init) {
  Network net(std::move(name), input);
  bool sequence = input.steps != 0;
  std::size_t steps = input.steps;
  std::size_t width = input.width;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& spec = layers[i];
    switch (spec.kind) {
      case LayerKind::Conv1D:
        if (!sequence) throw UsageError(net.name() + ": Conv1D needs a sequence input");
        net.add(std::make_unique<Conv1D>(width, spec.units, spec.activation, rng, init));
        width = spec.units;
        break;
      case LayerKind::Gru:
        if (!sequence) throw UsageError(net.name() + ": GRU needs a sequence input");
        net.add(std::make_unique<Gru>(width, spec.units, spec.activation, spec.return_sequences,
                                      rng, init));
        width = spec.units;
        sequence = spec.return_sequences;
        break;
      case LayerKind::Flatten:
        if (!sequence) throw UsageError(net.name() + ": Flatten needs a sequence input");
        net.add(std::make_unique<Flatten>(steps * width));
        width = steps * width;
        sequence = false;
        break;
      case LayerKind::Dense:
        if (sequence) {
          net.add(std::make_unique<Flatten>(steps * width));
          width = steps * width;
          sequence = false;
        }
        net.add(std::make_unique<Dense>(width, spec.units, spec.activation, rng, init));
        width = spec.units;
        break;
    }
  }
  return net;
}

}  // namespace nmguard::nn
