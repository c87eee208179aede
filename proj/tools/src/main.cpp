// nmguard: command-line front end for the net-metering attack detection toolchain.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nmguard/analysis.hpp"
#include "nmguard/attacks.hpp"
#include "nmguard/checkpoint.hpp"
#include "nmguard/config.hpp"
#include "nmguard/csv.hpp"
#include "nmguard/error.hpp"
#include "nmguard/ingest.hpp"
#include "nmguard/pipeline.hpp"
#include "nmguard/prep.hpp"
#include "nmguard/sample_csv.hpp"
#include "nmguard/svg.hpp"
#include "nmguard/synth.hpp"

namespace fs = std::filesystem;
using namespace nmguard;

namespace {

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_file, "JSON config file (see the key list in `nmguard --help`)")
      ->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", o.overrides, "override one config key: key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "global seed (same as --set seed=N)");
  cmd->add_option("-o,--out", o.out, "run root directory (same as --set paths.run_root=DIR)");
  cmd->add_option("-j,--threads", o.threads, "worker threads for independent models");
  cmd->add_flag("-q,--quiet", o.quiet, "suppress progress output");
}

RunConfig resolve(const CommonOptions& o) {
  RunConfig config = o.config_file.empty() ? RunConfig{} : load_config(o.config_file);
  for (const auto& kv : o.overrides) apply_override(config, kv);
  if (o.seed) config.seed = *o.seed;
  if (!o.out.empty()) config.run_root = o.out;
  if (o.threads) config.threads = *o.threads;
  config.finalize();
  return config;
}

fs::path open_run(const RunConfig& config, const std::string& command) {
  const fs::path dir = run_directory(config, command);
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << config_to_json(config) << '\n';
  return dir;
}

Logger logger(const CommonOptions& o) {
  if (o.quiet) return {};
  return [](const std::string& line) { std::cerr << line << '\n'; };
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

std::vector<CustomerProfile> profiles_or_empty(const std::string& path) {
  return path.empty() ? std::vector<CustomerProfile>{} : load_profiles_csv(path);
}

std::vector<WeatherDay> weather_or_fail(const std::string& path) {
  auto loaded = load_weather_csv(path);
  if (!loaded.rejects.empty()) {
    throw DataError(path + ":" + std::to_string(loaded.rejects.front().line) + ": " + loaded.rejects.front().reason);
  }
  return std::move(loaded.rows);
}

std::string key_table() {
  std::string out = "Config keys (JSON sections split on '.'; --set key=value overrides):\n";
  for (const auto& k : config_keys()) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "  %-32s %-7s default %-22s %s\n", k.key.c_str(), k.type.c_str(),
                  k.default_value.c_str(), k.doc.c_str());
    out += buf;
  }
  out += "\nExit codes: 0 success, 1 usage/config error, 2 data validation failure, 3 training divergence.\n";
  return out;
}

// ---- subcommands -----------------------------------------------------------

void cmd_synth(const CommonOptions& o) {
  const RunConfig config = resolve(o);
  const fs::path dir = open_run(config, "synth");
  const SynthDataset data = synth_benign_dataset(config.synth);
  std::vector<RawMeterRow> rows;
  std::map<std::string, const CustomerProfile*> by_id;
  for (const auto& p : data.profiles) by_id[p.customer_id] = &p;
  for (std::size_t i = 0; i < data.days.size(); ++i) {
    const auto& d = data.days[i];
    auto pair = to_meter_rows(*by_id.at(d.customer_id), d.date, data.consumption[i], data.generation[i]);
    rows.insert(rows.end(), pair.begin(), pair.end());
  }
  write_meter_csv(dir / "meter.csv", rows);
  write_weather_csv(dir / "weather.csv", data.weather);
  write_profiles_csv(dir / "profiles.csv", data.profiles);
  write_days_csv(dir / "days.csv", data.days);
  std::cout << dir.string() << '\n';
}

void cmd_ingest(const CommonOptions& o, const std::string& meter, const std::string& profiles_path) {
  const RunConfig config = resolve(o);
  const fs::path dir = open_run(config, "ingest");
  const auto loaded = load_meter_csv(meter);
  const CleanResult cleaned = clean(loaded.rows, config.clean);
  const auto days = build_day_series(cleaned.rows);
  std::map<std::string, std::string> locations;
  for (const auto& p : profiles_or_empty(profiles_path)) locations[p.customer_id] = p.location_id;
  const auto profiles = profiles_from_rows(cleaned.rows, locations);
  write_days_csv(dir / "days.csv", days);
  write_profiles_csv(dir / "profiles.csv", profiles);
  nlohmann::ordered_json report;
  report["input_rows"] = loaded.rows.size() + loaded.rejects.size();
  report["rejected_rows"] = nlohmann::ordered_json::array();
  for (const auto& r : loaded.rejects) report["rejected_rows"].push_back({{"line", r.line}, {"reason", r.reason}});
  report["dropped_days"] = {{"negative_generation", cleaned.dropped.negative_generation},
                            {"generation_over_cap", cleaned.dropped.generation_over_cap},
                            {"missing", cleaned.dropped.missing},
                            {"zero_consumption", cleaned.dropped.zero_consumption}};
  report["days"] = days.size();
  report["customers"] = profiles.size();
  write_json(dir / "ingest_report.json", report);
  std::cout << dir.string() << '\n';
}

void cmd_attack(const CommonOptions& o, const std::string& days_path, const std::string& profiles_path,
                const std::string& weather_path) {
  const RunConfig config = resolve(o);
  const fs::path dir = open_run(config, "attack");
  const auto days = load_days_csv(days_path);
  const auto profiles = load_profiles_csv(profiles_path);
  const auto weather = weather_or_fail(weather_path);
  const auto traces = build_malicious_dataset(days, profiles, config.attacks, derive_seed(config.seed, "attacks"));
  std::vector<LabeledDay> benign, malicious;
  for (const auto& d : days) benign.push_back({d, Provenance::synthetic()});
  for (const auto& t : traces) malicious.push_back({t.reported, Provenance::attack(t.attack_id)});
  write_samples_csv(dir / "benign.csv", assemble_samples(benign, weather, profiles));
  write_samples_csv(dir / "malicious.csv", assemble_samples(malicious, weather, profiles));
  write_attack_audit(dir / "attack_audit.json", traces);
  std::cout << dir.string() << '\n';
}

void cmd_prep(const CommonOptions& o, const std::vector<std::string>& inputs) {
  const RunConfig config = resolve(o);
  const fs::path dir = open_run(config, "prep");
  std::vector<FeatureSample> samples;
  for (const auto& path : inputs) {
    auto part = read_samples_csv(fs::path(path));
    samples.insert(samples.end(), part.begin(), part.end());
  }
  const PreparedData data = prepare(samples, config);
  write_samples_csv(dir / "train.csv", data.train);
  write_samples_csv(dir / "test.csv", data.test);
  data.normalizer.save(dir / "normalizer.json");
  const auto after = class_counts(data.train);
  const auto test = class_counts(data.test);
  nlohmann::ordered_json report;
  report["train_before"] = {{"benign", data.train_counts_before[0]}, {"malicious", data.train_counts_before[1]}};
  report["train_after"] = {{"benign", after[0]}, {"malicious", after[1]}};
  report["synthetic"] = data.synthetic;
  report["test"] = {{"benign", test[0]}, {"malicious", test[1]}};
  report["normalizer_fingerprint"] = data.normalizer.fingerprint();
  write_json(dir / "prep_report.json", report);
  std::cout << dir.string() << '\n';
}

void cmd_train(const CommonOptions& o, const std::string& train_path, const std::string& normalizer_path,
               const std::string& models) {
  RunConfig config = resolve(o);
  const bool baselines = models == "all" || models == "baselines";
  const bool detector = models == "all" || models == "detector";
  if (!baselines && !detector) throw UsageError("--models must be all, baselines or detector");
  const fs::path dir = open_run(config, "train");
  const auto train = read_samples_csv(fs::path(train_path));
  const Normalizer normalizer = Normalizer::load(normalizer_path);
  const TrainedModels trained = train_models(train, normalizer, config, logger(o), baselines, detector);
  write_training_curves(dir / "training_curves.csv", trained.curves);
  const std::string hash = config_hash(config);
  for (const auto& [arch, net] : trained.baselines) {
    save_baseline(dir / "checkpoints" / std::string(to_string(arch)), net, normalizer.fingerprint(), config.seed, hash);
  }
  if (trained.detector) save_detector(dir / "checkpoints" / "detector", trained.detector->detector, config.seed, hash);
  std::cout << dir.string() << '\n';
}

void cmd_eval(const CommonOptions& o, const std::string& test_path, const std::string& checkpoints,
              const std::string& normalizer_path) {
  const RunConfig config = resolve(o);
  const fs::path dir = open_run(config, "eval");
  const auto test = read_samples_csv(fs::path(test_path));
  const std::string fingerprint = Normalizer::load(normalizer_path).fingerprint();
  const auto labels = labels_of(test);
  Evaluation eval;
  bool any = false;
  for (auto arch : kAllBaselines) {
    const fs::path ck = fs::path(checkpoints) / std::string(to_string(arch));
    if (!fs::exists(ck / "manifest.json")) continue;
    std::string stored;
    const nn::Network net = load_baseline(ck, &stored);
    if (stored != fingerprint) {
      throw DataError(std::string(to_string(arch)) + " checkpoint was trained with normalizer " + stored +
                      ", test data uses " + fingerprint);
    }
    add_evaluation(eval, std::string(to_string(arch)), labels,
                   malicious_scores(nn::predict_batched(net, baseline_inputs(arch, test))));
    any = true;
  }
  const fs::path det = fs::path(checkpoints) / "detector";
  if (fs::exists(det / "manifest.json")) {
    const Detector d = load_detector(det);
    for (int s = 1; s <= 3; ++s) {
      add_evaluation(eval, "stage" + std::to_string(s), labels, malicious_scores(predict(d, test, s, fingerprint)));
    }
    any = true;
  }
  if (!any) throw DataError("no checkpoints found under " + checkpoints);
  write_evaluation(dir, eval);

  std::ofstream out(dir / "predictions.csv");
  out << "index,label";
  for (const auto& r : eval.reports) out << ',' << r.name;
  out << '\n';
  for (std::size_t i = 0; i < test.size(); ++i) {
    out << i << ',' << to_string(test[i].label);
    for (const auto& r : eval.reports) out << ',' << csv::format_exact(eval.scores.at(r.name)[i]);
    out << '\n';
  }
  std::cout << dir.string() << '\n';
}

void cmd_analyze(const CommonOptions& o, const std::string& days_path, const std::string& profiles_path,
                 const std::string& weather_path) {
  const RunConfig config = resolve(o);
  const fs::path dir = open_run(config, "analyze");
  const auto days = load_days_csv(days_path);
  std::map<std::string, std::vector<DaySeries>> by_customer;
  for (const auto& d : days) by_customer[d.customer_id].push_back(d);
  fs::create_directories(dir / "acf");

  std::ofstream patterns(dir / "patterns.csv");
  patterns << "customer_id,lag24,ci,daily_pattern\n";
  svg::Chart chart{"Autocorrelation of hourly net readings", "lag (hours)", "ACF", {}, {}};
  for (const auto& [id, series] : by_customer) {
    const PatternReport rep = daily_pattern_report(series, config.acf_max_lag);
    write_acf_csv(dir / "acf" / (id + ".csv"), rep.acf);
    patterns << id << ',' << csv::format_exact(rep.lag24) << ',' << csv::format_exact(rep.acf.ci_halfwidth) << ','
             << (rep.daily_pattern ? "true" : "false") << '\n';
    if (chart.series.size() < 4) {
      svg::Series s{id, {}, false};
      for (std::size_t k = 0; k < rep.acf.values.size(); ++k) s.points.push_back({double(k), rep.acf.values[k]});
      chart.series.push_back(std::move(s));
      chart.guides = {rep.acf.ci_halfwidth, -rep.acf.ci_halfwidth};
    }
  }
  svg::write(dir / "acf.svg", chart);

  if (!profiles_path.empty() && !weather_path.empty()) {
    const auto profiles = load_profiles_csv(profiles_path);
    const auto weather = weather_or_fail(weather_path);
    write_corr_csv(dir / "correlations.csv", weather_correlations(days, profiles, weather));
  }
  std::cout << dir.string() << '\n';
}

void cmd_report(const CommonOptions& o, const std::string& run) {
  const RunConfig config = resolve(o);
  const fs::path dir = open_run(config, "report");
  write_report_from_files(run, dir);
  std::ifstream summary(dir / "summary.md");
  std::cout << summary.rdbuf();
  std::cout << dir.string() << '\n';
}

void cmd_e2e(const CommonOptions& o) {
  const RunConfig config = resolve(o);
  const fs::path dir = run_directory(config, "e2e");
  const E2EResult result = run_e2e(config, dir, logger(o));
  std::cout << summary_markdown(result.evaluation.reports) << dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nmguard: synthesize net-metering data, inject false-reading attacks, and train and evaluate "
               "the three-stage CNN+GRU detector and its baselines."};
  app.footer(key_table());
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  CommonOptions common;
  std::string meter, profiles, weather, days, train_path, test_path, normalizer, checkpoints, run, models = "all";
  std::vector<std::string> sample_files;

  auto* synth = app.add_subcommand("synth", "generate synthetic meter, weather and profile data");
  add_common(synth, common);

  auto* ingest = app.add_subcommand("ingest", "load and clean half-hourly meter data into hourly net days");
  add_common(ingest, common);
  ingest->add_option("--meter", meter, "meter CSV (customer_id,c_max,category,date,h00a..h23b)")
      ->required()->check(CLI::ExistingFile);
  ingest->add_option("--profiles", profiles, "profiles CSV supplying location ids")->check(CLI::ExistingFile);

  auto* attack = app.add_subcommand("attack", "inject the four attacks into benign days (four copies per day)");
  add_common(attack, common);
  attack->add_option("--days", days, "day-series CSV")->required()->check(CLI::ExistingFile);
  attack->add_option("--profiles", profiles, "profiles CSV")->required()->check(CLI::ExistingFile);
  attack->add_option("--weather", weather, "weather CSV")->required()->check(CLI::ExistingFile);

  auto* prep = app.add_subcommand("prep", "split 2:1, normalize on train and balance with ADASYN");
  add_common(prep, common);
  prep->add_option("--samples", sample_files, "sample CSV(s)")->required()->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "train the baselines and the three-stage detector");
  add_common(train, common);
  train->add_option("--train", train_path, "normalized training sample CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--normalizer", normalizer, "normalizer.json from prep")->required()->check(CLI::ExistingFile);
  train->add_option("--models", models, "all | baselines | detector");

  auto* eval = app.add_subcommand("eval", "score a test set and write metrics and curves");
  add_common(eval, common);
  eval->add_option("--test", test_path, "normalized test sample CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--checkpoints", checkpoints, "checkpoint directory from train")
      ->required()->check(CLI::ExistingDirectory);
  eval->add_option("--normalizer", normalizer, "normalizer.json from prep")->required()->check(CLI::ExistingFile);

  auto* analyze = app.add_subcommand("analyze", "autocorrelation and weather-correlation analysis");
  add_common(analyze, common);
  analyze->add_option("--days", days, "day-series CSV")->required()->check(CLI::ExistingFile);
  analyze->add_option("--profiles", profiles, "profiles CSV")->check(CLI::ExistingFile);
  analyze->add_option("--weather", weather, "weather CSV")->check(CLI::ExistingFile);

  auto* report = app.add_subcommand("report", "render summary tables and SVG curves from an eval or e2e run");
  add_common(report, common);
  report->add_option("--run", run, "directory holding metrics.json, roc.csv and pr.csv")
      ->required()->check(CLI::ExistingDirectory);

  auto* e2e = app.add_subcommand("e2e", "synth -> attack -> prep -> train -> eval -> report");
  add_common(e2e, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) cmd_synth(common);
    if (*ingest) cmd_ingest(common, meter, profiles);
    if (*attack) cmd_attack(common, days, profiles, weather);
    if (*prep) cmd_prep(common, sample_files);
    if (*train) cmd_train(common, train_path, normalizer, models);
    if (*eval) cmd_eval(common, test_path, checkpoints, normalizer);
    if (*analyze) cmd_analyze(common, days, profiles, weather);
    if (*report) cmd_report(common, run);
    if (*e2e) cmd_e2e(common);
  } catch (const Error& e) {
    std::cerr << "nmguard: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "nmguard: internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
