// Acceptance run: prints one PASS/FAIL line per acceptance criterion and exits
// nonzero when any of them fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nmguard/analysis.hpp"
#include "nmguard/attacks.hpp"
#include "nmguard/config.hpp"
#include "nmguard/metrics.hpp"
#include "nmguard/nn/ops.hpp"
#include "nmguard/pipeline.hpp"
#include "nmguard/prep.hpp"
#include "nmguard/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace nmguard;
using namespace nmguard::nn;
using oracle::random_tensor;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// ---- 1: gradient checks ------------------------------------------------------

Tensor ones_hot(std::size_t batch, std::size_t classes, Rng& rng) {
  Tensor t(Shape{batch, classes}, 0.0);
  for (std::size_t b = 0; b < batch; ++b) t[b * classes + rng.below(classes)] = 1.0;
  return t;
}

Tensor away_from_zero(Shape shape, Rng& rng) {
  Tensor t = random_tensor(std::move(shape), rng, -2.0, 2.0);
  for (auto& v : t.values()) {
    if (std::abs(v) < 0.05) v += v < 0 ? -0.1 : 0.1;
  }
  return t;
}

Outcome gradient_checks() {
  constexpr int kInstances = 20;
  constexpr double kTolerance = 1e-4;
  const auto start = Clock::now();
  Rng rng(777);
  struct Case {
    std::string name;
    std::function<Var(const std::vector<Var>&)> f;
    std::function<std::vector<Tensor>()> inputs;
  };
  std::vector<Case> cases;
  cases.push_back({"dense", [](const std::vector<Var>& v) { return affine(v[0], v[1], v[2]); }, [&] {
                     const std::size_t b = 1 + rng.below(4), k = 1 + rng.below(5), n = 1 + rng.below(5);
                     return std::vector<Tensor>{random_tensor({b, k}, rng), random_tensor({k, n}, rng),
                                                random_tensor({n}, rng)};
                   }});
  cases.push_back({"conv1d", [](const std::vector<Var>& v) { return conv1d(v[0], v[1], v[2]); }, [&] {
                     const std::size_t b = 1 + rng.below(3), t = 1 + rng.below(6), ci = 1 + rng.below(3),
                                       co = 1 + rng.below(4);
                     return std::vector<Tensor>{random_tensor({b, t, ci}, rng), random_tensor({3 * ci, co}, rng),
                                                random_tensor({co}, rng)};
                   }});
  for (Activation act : {Activation::Tanh, Activation::Sigmoid, Activation::Relu}) {
    for (bool seq : {false, true}) {
      cases.push_back({"gru-" + std::string(to_string(act)) + (seq ? "-seq" : ""),
                       [act, seq](const std::vector<Var>& v) { return gru(v[0], v[1], v[2], v[3], act, seq); }, [&] {
                         const std::size_t b = 1 + rng.below(3), t = 1 + rng.below(5), c = 1 + rng.below(3),
                                           h = 1 + rng.below(4);
                         return std::vector<Tensor>{random_tensor({b, t, c}, rng), random_tensor({c, 3 * h}, rng),
                                                    random_tensor({h, 3 * h}, rng), random_tensor({3 * h}, rng)};
                       }});
    }
  }
  for (Activation act : {Activation::Linear, Activation::Relu, Activation::Sigmoid, Activation::Tanh, Activation::Elu}) {
    cases.push_back({std::string(to_string(act)), [act](const std::vector<Var>& v) { return activate(v[0], act); },
                     [&] { return std::vector<Tensor>{away_from_zero({2 + rng.below(3), 1 + rng.below(4)}, rng)}; }});
  }
  cases.push_back({"softmax", [](const std::vector<Var>& v) { return softmax(v[0]); }, [&] {
                     return std::vector<Tensor>{random_tensor({1 + rng.below(3), 2 + rng.below(4)}, rng, -3, 3)};
                   }});

  double worst = 0.0;
  std::string worst_name;
  auto record = [&](const std::string& name, double err) {
    if (err >= worst) {
      worst = err;
      worst_name = name;
    }
  };
  for (const auto& c : cases) {
    for (int i = 0; i < kInstances; ++i) record(c.name, oracle::gradient_check(c.f, c.inputs(), rng));
  }
  for (int i = 0; i < kInstances; ++i) {
    const std::size_t b = 1 + rng.below(4), n = 2 + rng.below(3);
    const Tensor y = ones_hot(b, n, rng);
    record("cross-entropy", oracle::gradient_check(
                                [&y](const std::vector<Var>& v) { return cross_entropy(y, softmax(v[0])); },
                                {random_tensor({b, n}, rng, -3, 3)}, rng));
  }
  const double elapsed = seconds_since(start);
  return {worst < kTolerance && elapsed < 60.0,
          fmt("%zu cases x %d instances, worst rel err %.2e (%s) < 1e-4, %.1fs < 60s", cases.size() + 1, kInstances,
              worst, worst_name.c_str(), elapsed)};
}

// ---- 2 and 3: attacks --------------------------------------------------------

Outcome attack_oracle() {
  Rng pick(2024);
  const AttackParams params;
  std::size_t mismatches = 0;
  for (int id = 1; id <= 4; ++id) {
    for (int i = 0; i < 1000; ++i) {
      const double cmax = pick.uniform(1.0, 5.0);
      const DaySeries d = oracle::random_day(pick, cmax, i);
      const CustomerProfile prof{d.customer_id, cmax, "L"};
      const auto trace = run_attack(id, d, prof, params, 17);
      const auto ref = oracle::naive_attack(id, d, prof, params, attack_rng(17, d, id));
      for (std::size_t t = 0; t < kHoursPerDay; ++t) {
        if (!bitwise_equal(trace.reported.readings[t], ref[t])) {
          ++mismatches;
          break;
        }
      }
    }
  }
  return {mismatches == 0, fmt("4 attacks x 1000 random days, %zu days differ from the naive reference", mismatches)};
}

Outcome financial_gain() {
  Rng pick(3031);
  std::size_t violations = 0, not_cheaper = 0, strict_days = 0;
  for (int i = 0; i < 10000; ++i) {
    const double cmax = pick.uniform(1.0, 5.0);
    const DaySeries d = oracle::random_day(pick, cmax, i);
    const CustomerProfile prof{d.customer_id, cmax, "L"};
    const bool nonzero = std::any_of(d.readings.begin(), d.readings.end(), [](double r) { return r != 0.0; });
    for (int id = 1; id <= 4; ++id) {
      const auto trace = run_attack(id, d, prof, AttackParams{}, 11);
      if (!validate_day(trace.reported, prof).ok() || check_financial_gain(trace, prof)) ++violations;
      if (id >= 2 && nonzero) {
        ++strict_days;
        if (!(bill(trace.reported.readings) < bill(d.readings))) ++not_cheaper;
      }
    }
  }
  return {violations == 0 && not_cheaper == 0,
          fmt("10000 days x 4 attacks: %zu slot violations; attacks 2-4 bill not lower on %zu of %zu nonzero days",
              violations, not_cheaper, strict_days)};
}

// ---- 4: metrics ----------------------------------------------------------------

Outcome metric_arithmetic() {
  const ScalarMetrics m = scalar_metrics(ConfusionCounts{8, 5, 1, 2});
  const double expected[] = {81.25, 800.0 / 9.0, 80.0, 100.0 / 6.0, 80.0 - 100.0 / 6.0, 1600.0 / 19.0};
  const std::optional<double> got[] = {m.acc, m.pr, m.dr, m.fa, m.hd, m.f1};
  double worst = 0.0;
  bool defined = true;
  for (int i = 0; i < 6; ++i) {
    if (!got[i]) {
      defined = false;
      continue;
    }
    worst = std::max(worst, std::abs(*got[i] - expected[i]));
  }

  Rng rng(404);
  double worst_auc = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(11);
    std::vector<Label> labels(n);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = i == 0 ? Label::Malicious : i == 1 ? Label::Benign : (rng.below(2) ? Label::Malicious : Label::Benign);
      scores[i] = trial % 2 ? static_cast<double>(rng.below(4)) / 4.0 : rng.uniform01();
    }
    worst_auc = std::max(worst_auc, std::abs(roc_curve(labels, scores).auc - oracle::pairwise_auc(labels, scores)));
  }
  return {defined && worst < 1e-9 && worst_auc < 1e-12,
          fmt("(8,5,1,2): max |err| %.1e < 1e-9 (ACC %.4f PR %.4f DR %.4f FA %.4f HD %.4f F1 %.4f); "
              "AUC vs pairwise over 200 sets: max |err| %.1e < 1e-12",
              worst, m.acc.value_or(NAN), m.pr.value_or(NAN), m.dr.value_or(NAN), m.fa.value_or(NAN),
              m.hd.value_or(NAN), m.f1.value_or(NAN), worst_auc)};
}

// ---- 5: ACF and weather correlation -------------------------------------------

Outcome acf_and_correlation() {
  Rng rng(55);
  const auto series = oracle::ar1(0.8, 10000, rng);
  const AcfResult r = acf(series, 2);
  const bool acf_ok = r.values[1] >= 0.77 && r.values[1] <= 0.83 && r.values[2] >= 0.61 && r.values[2] <= 0.67;

  const SynthDataset data = synth_benign_dataset(SynthConfig{});
  std::size_t customers = 0, negative = 0;
  for (const auto& row : weather_correlations(data.days, data.profiles, data.weather)) {
    if (row.target != "irradiance") continue;
    ++customers;
    if (row.coefficient < 0.0) ++negative;
  }
  return {acf_ok && customers == 31 && negative >= 30,
          fmt("AR(1) phi=0.8: ACF(1) %.4f in [0.77,0.83], ACF(2) %.4f in [0.61,0.67]; "
              "Pearson(readings, irradiance) < 0 for %zu of %zu customers (need >= 30)",
              r.values[1], r.values[2], negative, customers)};
}

// ---- 6 and 7: desk-scale end to end --------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double hd_of(const Evaluation& eval, const std::string& name) {
  for (const auto& r : eval.reports) {
    if (r.name == name) return r.scalars.hd.value_or(NAN);
  }
  return NAN;
}

struct E2ERun {
  fs::path dir;
  Evaluation eval;
  double seconds = 0.0;
};

E2ERun desk_scale(const fs::path& root, int epochs, int threads) {
  RunConfig config;
  if (epochs > 0) apply_override(config, "train.max_epochs=" + std::to_string(epochs));
  config.threads = threads;
  config.run_root = root.string();
  config.finalize();
  const fs::path dir = run_directory(config, "e2e");
  fs::remove_all(dir);
  const auto start = Clock::now();
  auto result = run_e2e(config, dir, [](const std::string& line) { std::cerr << "  | " << line << '\n'; });
  return {dir, std::move(result.evaluation), seconds_since(start)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string work_dir = (fs::temp_directory_path() / "nmguard_acceptance").string();
  int epochs = 3;
  // Up to four cores; more threads than cores only adds contention.
  int threads = static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 4u));
  std::vector<int> only;
  app.add_option("--work-dir", work_dir, "directory for the end-to-end runs");
  app.add_option("--epochs", epochs, "epoch cap for the end-to-end runs (0 keeps the configured default)");
  app.add_option("--threads", threads, "worker threads for the timed end-to-end run (default: min(4, cores))");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int id) { return selected.empty() || selected.count(id) > 0; };
  int failures = 0;
  // Lines also go to a report file, since ctest only shows output of failing tests.
  fs::create_directories(work_dir);
  std::ofstream report_file(fs::path(work_dir) / "acceptance_report.txt");
  auto emit = [&](const std::string& line) {
    std::cout << line << std::endl;
    report_file << line << std::endl;
  };
  auto report = [&](int id, const std::string& title, const Outcome& o) {
    if (!o.pass) ++failures;
    emit(std::string(o.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + " [" + title + "]: " + o.detail);
  };

  try {
    if (wanted(1)) report(1, "gradient checks", gradient_checks());
    if (wanted(2)) report(2, "attack oracle", attack_oracle());
    if (wanted(3)) report(3, "financial gain", financial_gain());
    if (wanted(4)) report(4, "metric arithmetic", metric_arithmetic());
    if (wanted(5)) report(5, "ACF and correlation", acf_and_correlation());
    if (wanted(6) || wanted(7)) {
      const std::string budget = epochs > 0 ? fmt("max_epochs=%d", epochs) : std::string("default epoch schedule");
      const E2ERun first = desk_scale(fs::path(work_dir) / "first", epochs, threads);
      const double cnngru = hd_of(first.eval, "cnngru"), s1 = hd_of(first.eval, "stage1"),
                   s3 = hd_of(first.eval, "stage3");
      if (wanted(6)) {
        report(6, "desk-scale e2e",
               {cnngru >= 70.0 && s3 >= 70.0 && s3 >= s1 && first.seconds < 1200.0,
                fmt("31x365 defaults, %s, %d threads on %u hardware threads: CnnGru HD %.2f >= 70, "
                    "S3 HD %.2f >= 70, S3 HD >= S1 HD %.2f, runtime %.0fs < 1200s",
                    budget.c_str(), threads, std::thread::hardware_concurrency(), cnngru, s3, s1, first.seconds)});
      }
      if (wanted(7)) {
        // The repeat uses a different thread count; results must not depend on it.
        const int repeat_threads = threads == 1 ? 2 : 1;
        const E2ERun second = desk_scale(fs::path(work_dir) / "second", epochs, repeat_threads);
        const std::string a = slurp(first.dir / "metrics.json"), b = slurp(second.dir / "metrics.json");
        report(7, "reproducibility",
               {!a.empty() && a == b,
                fmt("metrics.json from two runs (%d and %d threads): %zu vs %zu bytes, %s", threads, repeat_threads,
                    a.size(), b.size(), a == b ? "identical" : "DIFFERENT")});
      }
    }
    if (wanted(8)) {
      Rng rng(88);
      std::vector<FeatureSample> train;
      for (int i = 0; i < 250; ++i) {
        FeatureSample s;
        for (auto& f : s.features) f = rng.uniform01();
        s.features[kDayIndex] = static_cast<double>(rng.below(7));
        s.features[kSeasonIndex] = static_cast<double>(rng.below(4));
        s.label = i % 5 == 0 ? Label::Benign : Label::Malicious;
        s.provenance = s.label == Label::Benign ? Provenance::synthetic() : Provenance::attack(1 + i % 4);
        train.push_back(s);
      }
      const auto copy = train;
      const AdasynResult result = adasyn(train, AdasynConfig{});
      const auto counts = class_counts(result.samples);
      std::size_t outside = 0, altered = 0;
      for (const auto& rec : result.records) {
        const auto& a = train[rec.base].features;
        const auto& b = train[rec.neighbor].features;
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
          if (rec.unrounded[f] < std::min(a[f], b[f]) || rec.unrounded[f] > std::max(a[f], b[f])) {
            ++outside;
            break;
          }
        }
      }
      for (std::size_t i = 0; i < train.size(); ++i) {
        if (result.samples[i].features != copy[i].features || result.samples[i].label != copy[i].label ||
            train[i].features != copy[i].features) {
          ++altered;
        }
      }
      report(8, "ADASYN",
             {counts[0] == counts[1] && outside == 0 && altered == 0 && result.records.size() == 150,
              fmt("50:200 -> %zu:%zu (%zu synthetic); %zu synthetic samples outside their parents' box; "
                  "%zu originals altered",
                  counts[0], counts[1], result.records.size(), outside, altered)});
    }
  } catch (const std::exception& e) {
    emit(std::string("FAIL acceptance run aborted: ") + e.what());
    return 1;
  }
  emit(failures == 0 ? "all selected criteria passed" : fmt("%d criteria failed", failures));
  return failures == 0 ? 0 : 1;
}
