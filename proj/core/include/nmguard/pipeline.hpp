#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nmguard/attacks.hpp"
#include "nmguard/config.hpp"
#include "nmguard/detector.hpp"
#include "nmguard/metrics.hpp"
#include "nmguard/prep.hpp"

namespace nmguard {

/// Progress sink; receives one human-readable line at a time.
using Logger = std::function<void(const std::string&)>;

/// Benign days followed by every attacked copy (four per benign day).
std::vector<LabeledDay> label_days(std::span<const DaySeries> benign, std::span<const AttackTrace> traces);

struct PreparedData {
  std::vector<FeatureSample> train;  // normalized, balanced when ADASYN is on
  std::vector<FeatureSample> test;   // normalized with the training fit
  Normalizer normalizer;
  std::array<std::size_t, 2> train_counts_before{};  // {benign, malicious} before balancing
  std::size_t synthetic = 0;
};

/// Split, normalize on train, then balance the training set.
PreparedData prepare(std::span<const FeatureSample> samples, const RunConfig& config);

struct TrainedModels {
  std::vector<std::pair<Baseline, nn::Network>> baselines;
  std::optional<TrainedDetector> detector;
  std::map<std::string, std::vector<nn::EpochRecord>> curves;  // by model name
};

/// Trains the configured baselines and the cascade. Independent models run
/// on up to `config.threads` threads; the results do not depend on the count.
TrainedModels train_models(std::span<const FeatureSample> train, const Normalizer& normalizer,
                           const RunConfig& config, const Logger& log = {}, bool with_baselines = true,
                           bool with_detector = true);

struct Evaluation {
  std::vector<MetricReport> reports;  // baselines, then stage1..stage3
  std::vector<NamedCurve> roc;
  std::vector<NamedCurve> pr;
  std::map<std::string, std::vector<double>> scores;  // p_malicious per test sample
};

Evaluation evaluate_models(const TrainedModels& models, std::span<const FeatureSample> test,
                           const std::string& normalizer_fingerprint);

/// Adds one model's scores to an evaluation.
void add_evaluation(Evaluation& eval, const std::string& name, std::span<const Label> labels,
                    std::vector<double> scores);

/// `model,epoch,train_loss,validation_loss`
void write_training_curves(const std::filesystem::path& path,
                           const std::map<std::string, std::vector<nn::EpochRecord>>& curves);

/// Markdown tables in the layout of the baseline and stage comparisons.
std::string summary_markdown(std::span<const MetricReport> reports);

/// metrics.json, roc.csv, pr.csv, summary.md, roc.svg, pr.svg in `dir`.
void write_evaluation(const std::filesystem::path& dir, const Evaluation& eval);

/// Renders summary.md and the SVG curves into `out_dir` from an evaluation
/// directory's metrics.json, roc.csv and pr.csv.
void write_report_from_files(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir);

struct E2EResult {
  std::filesystem::path run_dir;
  Evaluation evaluation;
  std::size_t n_samples = 0;
  PreparedData data;
};

/// synth -> attack -> assemble -> prep -> train -> eval -> report, writing all
/// artifacts under `run_dir`.
E2EResult run_e2e(const RunConfig& config, const std::filesystem::path& run_dir, const Logger& log = {});

/// `<run_root>/<command>-<config hash>`
std::filesystem::path run_directory(const RunConfig& config, const std::string& command);

}  // namespace nmguard
