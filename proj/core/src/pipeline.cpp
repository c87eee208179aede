#include "nmguard/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nmguard/checkpoint.hpp"
#include "nmguard/csv.hpp"
#include "nmguard/error.hpp"
#include "nmguard/sample_csv.hpp"
#include "nmguard/svg.hpp"
#include "nmguard/synth.hpp"

namespace nmguard {

namespace {

std::string seconds_since(std::chrono::steady_clock::time_point t0) {
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1fs", s);
  return buf;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<double> opt_from_json(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  return std::nullopt;
}

std::vector<NamedCurve> read_curves(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<NamedCurve> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = csv::split(csv::chomp(line));
    if (fields.size() != 4) throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
    CurvePoint p;
    double values[3];
    for (int i = 0; i < 3; ++i) {
      if (fields[1 + i] == "inf") {
        values[i] = std::numeric_limits<double>::infinity();
      } else if (!csv::parse_double(fields[1 + i], values[i])) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad number");
      }
    }
    p = {values[0], values[1], values[2]};
    if (out.empty() || out.back().name != fields[0]) out.push_back({std::string(fields[0]), {}});
    out.back().curve.points.push_back(p);
  }
  return out;
}

svg::Chart curve_chart(std::span<const NamedCurve> curves, const std::string& title, const std::string& x,
                       const std::string& y) {
  svg::Chart chart;
  chart.title = title;
  chart.x_label = x;
  chart.y_label = y;
  for (const auto& c : curves) {
    svg::Series s;
    s.name = c.name;
    for (const auto& p : c.curve.points) s.points.push_back({p.x, p.y});
    chart.series.push_back(std::move(s));
  }
  return chart;
}

void write_report_files(const std::filesystem::path& dir, std::span<const MetricReport> reports,
                        std::span<const NamedCurve> roc, std::span<const NamedCurve> pr) {
  {
    std::ofstream out(dir / "summary.md");
    if (!out) throw DataError("cannot write " + (dir / "summary.md").string());
    out << summary_markdown(reports);
  }
  svg::write(dir / "roc.svg", curve_chart(roc, "ROC curves", "false positive rate", "true positive rate"));
  svg::write(dir / "pr.svg", curve_chart(pr, "Precision-recall curves", "recall", "precision"));
}

}  // namespace

std::vector<LabeledDay> label_days(std::span<const DaySeries> benign, std::span<const AttackTrace> traces) {
  std::vector<LabeledDay> out;
  out.reserve(benign.size() + traces.size());
  for (const auto& d : benign) out.push_back({d, Provenance::synthetic()});
  for (const auto& t : traces) out.push_back({t.reported, Provenance::attack(t.attack_id)});
  return out;
}

PreparedData prepare(std::span<const FeatureSample> samples, const RunConfig& config) {
  SplitResult parts = split(samples, config.split);
  NormalizeResult norm = fit_transform_normalize(parts.train, parts.test);
  PreparedData out;
  out.train_counts_before = class_counts(norm.train);
  out.normalizer = norm.normalizer;
  out.test = std::move(norm.test);
  if (config.train.adasyn) {
    AdasynResult balanced = adasyn(norm.train, config.adasyn, &out.normalizer);
    out.synthetic = balanced.records.size();
    out.train = std::move(balanced.samples);
  } else {
    out.train = std::move(norm.train);
  }
  return out;
}

TrainedModels train_models(std::span<const FeatureSample> train, const Normalizer& normalizer,
                           const RunConfig& config, const Logger& log, bool with_baselines, bool with_detector) {
  std::mutex log_mutex;
  auto say = [&](const std::string& line) {
    if (!log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    log(line);
  };
  auto epoch_logger = [&](const std::string& model) {
    return [&say, model](const nn::EpochRecord& r) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "  %-7s epoch %3d  train %.5f  val %.5f", model.c_str(), r.epoch, r.train_loss,
                    r.validation_loss);
      say(buf);
    };
  };

  TrainedModels out;
  std::vector<std::function<void()>> jobs;
  const std::string fingerprint = normalizer.fingerprint();
  const std::uint64_t init_seed = derive_seed(config.seed, "init");

  if (with_baselines) {
    out.baselines.reserve(config.baselines.size());
    for (auto b : config.baselines) {
      out.baselines.emplace_back(b, build_baseline(baseline_spec(b), init_seed));
    }
    for (std::size_t i = 0; i < out.baselines.size(); ++i) {
      jobs.push_back([&, i] {
        auto& [arch, net] = out.baselines[i];
        const std::string name(to_string(arch));
        const auto t0 = std::chrono::steady_clock::now();
        say("training " + name + " (" + std::to_string(net.parameter_count()) + " parameters)");
        nn::Dataset data{baseline_inputs(arch, train), labels_of(train)};
        auto curve = nn::train_classifier(net, data, train_config_for(config, name), epoch_logger(name));
        say("finished " + name + " in " + seconds_since(t0));
        std::lock_guard<std::mutex> lock(log_mutex);
        out.curves[name] = std::move(curve);
      });
    }
  }
  std::array<std::vector<nn::EpochRecord>, 3> stage_curves;
  if (with_detector) {
    out.detector = TrainedDetector{make_detector(config.forwarding, init_seed, fingerprint), {}};
    jobs.insert(jobs.begin(), [&] {
      const auto t0 = std::chrono::steady_clock::now();
      say("training 3-stage detector (forwarding: " + std::string(to_string(config.forwarding)) + ")");
      const std::array<nn::TrainConfig, 3> cfgs{train_config_for(config, "stage1"), train_config_for(config, "stage2"),
                                               train_config_for(config, "stage3")};
      stage_curves = train_stages(out.detector->detector, train, cfgs,
                                  [&](const std::string& model, const nn::EpochRecord& r) { epoch_logger(model)(r); });
      say("finished detector in " + seconds_since(t0));
    });
  }

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, config.threads)), jobs.size());
  if (workers <= 1) {
    for (auto& job : jobs) job();
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
          try {
            jobs[j]();
          } catch (...) {
            errors[j] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  if (with_detector) {
    out.detector->curves = stage_curves;
    for (int s = 0; s < 3; ++s) out.curves["stage" + std::to_string(s + 1)] = stage_curves[static_cast<std::size_t>(s)];
  }
  return out;
}

void add_evaluation(Evaluation& eval, const std::string& name, std::span<const Label> labels,
                    std::vector<double> scores) {
  eval.reports.push_back(evaluate_scores(name, labels, scores));
  eval.roc.push_back({name, roc_curve(labels, scores)});
  eval.pr.push_back({name, pr_curve(labels, scores)});
  eval.scores[name] = std::move(scores);
}

Evaluation evaluate_models(const TrainedModels& models, std::span<const FeatureSample> test,
                           const std::string& normalizer_fingerprint) {
  Evaluation eval;
  const auto labels = labels_of(test);
  for (const auto& [arch, net] : models.baselines) {
    add_evaluation(eval, std::string(to_string(arch)), labels,
                   malicious_scores(nn::predict_batched(net, baseline_inputs(arch, test))));
  }
  if (models.detector) {
    for (int s = 1; s <= 3; ++s) {
      add_evaluation(eval, "stage" + std::to_string(s), labels,
                     malicious_scores(predict(models.detector->detector, test, s, normalizer_fingerprint)));
    }
  }
  return eval;
}

void write_training_curves(const std::filesystem::path& path,
                           const std::map<std::string, std::vector<nn::EpochRecord>>& curves) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "model,epoch,train_loss,validation_loss\n";
  for (const char* name : kModelNames) {
    const auto it = curves.find(name);
    if (it == curves.end()) continue;
    for (const auto& r : it->second) {
      out << name << ',' << r.epoch << ',' << csv::format_exact(r.train_loss) << ','
          << csv::format_exact(r.validation_loss) << '\n';
    }
  }
}

std::string summary_markdown(std::span<const MetricReport> reports) {
  auto table = [&](const std::string& title, const std::string& first, auto keep) {
    std::ostringstream o;
    o << "## " << title << "\n\n";
    o << "| " << first << " | ACC | PR | DR | FA | HD | F1 | AUC-ROC | AUC-PR |\n";
    o << "|---|---|---|---|---|---|---|---|---|\n";
    bool any = false;
    for (const auto& r : reports) {
      if (!keep(r.name)) continue;
      any = true;
      char aucs[64];
      std::snprintf(aucs, sizeof aucs, "%.4f | %.4f", r.auc_roc, r.auc_pr);
      o << "| " << r.name << " | " << format_metric(r.scalars.acc) << " | " << format_metric(r.scalars.pr) << " | "
        << format_metric(r.scalars.dr) << " | " << format_metric(r.scalars.fa) << " | "
        << format_metric(r.scalars.hd) << " | " << format_metric(r.scalars.f1) << " | " << aucs << " |\n";
    }
    return any ? o.str() + "\n" : std::string();
  };
  const auto is_stage = [](const std::string& n) { return n.rfind("stage", 0) == 0; };
  std::string out = "# Detection results (test set, threshold 0.5, malicious = positive)\n\n";
  out += table("Baseline detectors", "Architecture", [&](const std::string& n) { return !is_stage(n); });
  out += table("Detector stages", "Stage", is_stage);
  out += "HD is recomputed as DR - FA. Percentages except AUC.\n";
  return out;
}

void write_evaluation(const std::filesystem::path& dir, const Evaluation& eval) {
  std::filesystem::create_directories(dir);
  write_metrics_json(dir / "metrics.json", eval.reports);
  write_roc_csv(dir / "roc.csv", eval.roc);
  write_pr_csv(dir / "pr.csv", eval.pr);
  write_report_files(dir, eval.reports, eval.roc, eval.pr);
}

void write_report_from_files(const std::filesystem::path& dir, const std::filesystem::path& out_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text(dir / "metrics.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("metrics.json: ") + e.what());
  }
  std::vector<MetricReport> reports;
  try {
    for (const auto& j : doc.at("reports")) {
      MetricReport r;
      r.name = j.at("model").get<std::string>();
      r.threshold = j.at("threshold").get<double>();
      r.scalars = {opt_from_json(j.at("acc")), opt_from_json(j.at("pr")), opt_from_json(j.at("dr")),
                   opt_from_json(j.at("fa")),  opt_from_json(j.at("hd")), opt_from_json(j.at("f1"))};
      r.auc_roc = j.at("auc_roc").get<double>();
      r.auc_pr = j.at("auc_pr").get<double>();
      const auto& c = j.at("confusion");
      r.counts = {c.at("tp").get<std::int64_t>(), c.at("tn").get<std::int64_t>(), c.at("fp").get<std::int64_t>(),
                  c.at("fn").get<std::int64_t>()};
      reports.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("metrics.json: ") + e.what());
  }
  std::filesystem::create_directories(out_dir);
  write_report_files(out_dir, reports, read_curves(dir / "roc.csv"), read_curves(dir / "pr.csv"));
}

E2EResult run_e2e(const RunConfig& input_config, const std::filesystem::path& run_dir, const Logger& log) {
  RunConfig config = input_config;
  config.finalize();
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(run_dir);
  {
    std::ofstream out(run_dir / "config.json");
    out << config_to_json(config) << '\n';
  }

  say("synthesizing " + std::to_string(config.synth.n_customers) + " customers x " +
      std::to_string(config.synth.n_days) + " days");
  const SynthDataset benign = synth_benign_dataset(config.synth);
  say("injecting attacks");
  const auto traces = build_malicious_dataset(benign.days, benign.profiles, config.attacks,
                                              derive_seed(config.seed, "attacks"));
  const auto labeled = label_days(benign.days, traces);
  const auto samples = assemble_samples(labeled, benign.weather, benign.profiles);
  say("assembled " + std::to_string(samples.size()) + " samples");

  E2EResult result;
  result.run_dir = run_dir;
  result.n_samples = samples.size();
  result.data = prepare(samples, config);
  const auto& data = result.data;
  say("train " + std::to_string(data.train.size()) + " (" + std::to_string(data.synthetic) + " synthetic), test " +
      std::to_string(data.test.size()));
  data.normalizer.save(run_dir / "normalizer.json");

  const TrainedModels models = train_models(data.train, data.normalizer, config, log);
  write_training_curves(run_dir / "training_curves.csv", models.curves);
  const std::string hash = config_hash(config);
  for (const auto& [arch, net] : models.baselines) {
    save_baseline(run_dir / "checkpoints" / std::string(to_string(arch)), net, data.normalizer.fingerprint(),
                  config.seed, hash);
  }
  if (models.detector) save_detector(run_dir / "checkpoints" / "detector", models.detector->detector, config.seed, hash);

  say("evaluating on the test set");
  result.evaluation = evaluate_models(models, data.test, data.normalizer.fingerprint());
  write_evaluation(run_dir, result.evaluation);
  say("e2e finished in " + seconds_since(t0) + "; artifacts in " + run_dir.string());
  return result;
}

std::filesystem::path run_directory(const RunConfig& config, const std::string& command) {
  return config.run_root / (command + "-" + config_hash(config));
}

}  // namespace nmguard
