#include <benchmark/benchmark.h>

#include <vector>

#include "nmguard/attacks.hpp"
#include "nmguard/metrics.hpp"
#include "nmguard/nn/ops.hpp"
#include "nmguard/prep.hpp"
#include "nmguard/rng.hpp"

using namespace nmguard;
using namespace nmguard::nn;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Affine(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Var x = Var::constant(random_tensor({64, n}, rng));
  const Var w = Var::constant(random_tensor({n, n}, rng));
  const Var b = Var::constant(random_tensor({n}, rng));
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(affine(x, w, b).value()[0]);
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_Affine)->Arg(64)->Arg(128)->Arg(256);

// One training step's worth of work for a conv -> GRU stack on a 24-hour batch.
void BM_ConvGruForwardBackward(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor x = random_tensor({64, 24, 1}, rng);
  const Tensor k = random_tensor({3, h}, rng), kb = random_tensor({h}, rng);
  const Tensor wx = random_tensor({h, 3 * h}, rng), wh = random_tensor({h, 3 * h}, rng), gb = random_tensor({3 * h}, rng);
  for (auto _ : state) {
    const Var vk = Var::leaf(k, true), vkb = Var::leaf(kb, true);
    const Var vwx = Var::leaf(wx, true), vwh = Var::leaf(wh, true), vgb = Var::leaf(gb, true);
    const Var c = activate(conv1d(Var::constant(x), vk, vkb), Activation::Relu);
    const Var loss = sum(gru(c, vwx, vwh, vgb, Activation::Tanh, false));
    loss.backward();
    benchmark::DoNotOptimize(vwh.grad()[0]);
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_ConvGruForwardBackward)->Arg(32)->Arg(64)->Arg(128);

void BM_Attacks(benchmark::State& state) {
  Rng rng(3);
  DaySeries day{"C001", Date(2011, 3, 1), std::vector<double>(kHoursPerDay)};
  for (auto& r : day.readings) r = rng.uniform(-2.5, 3.0);
  const CustomerProfile profile{"C001", 3.0, "L01"};
  for (auto _ : state) {
    for (int id = 1; id <= 4; ++id) benchmark::DoNotOptimize(run_attack(id, day, profile, AttackParams{}, 7));
  }
  state.SetItemsProcessed(state.iterations() * 4);
}
BENCHMARK(BM_Attacks);

void BM_Adasyn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  std::vector<FeatureSample> train(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& f : train[i].features) f = rng.uniform01();
    train[i].features[kDayIndex] = static_cast<double>(rng.below(7));
    train[i].features[kSeasonIndex] = static_cast<double>(rng.below(4));
    train[i].label = i % 5 == 0 ? Label::Benign : Label::Malicious;
  }
  for (auto _ : state) benchmark::DoNotOptimize(adasyn(train, AdasynConfig{}).samples.size());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Adasyn)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_RocCurve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  std::vector<Label> labels(n);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = rng.below(2) ? Label::Malicious : Label::Benign;
    scores[i] = rng.uniform01();
  }
  for (auto _ : state) benchmark::DoNotOptimize(roc_curve(labels, scores).auc);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_RocCurve)->Arg(1000)->Arg(20000);

}  // namespace

BENCHMARK_MAIN();
