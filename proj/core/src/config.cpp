#include "nmguard/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "nmguard/csv.hpp"
#include "nmguard/error.hpp"
#include "nmguard/rng.hpp"

namespace nmguard {

namespace {

enum class Kind { Int, UInt, Real, Bool, Text, DateValue, BaselineList, ForwardingValue };

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::Int: return "int";
    case Kind::UInt: return "uint";
    case Kind::Real: return "real";
    case Kind::Bool: return "bool";
    case Kind::Text: return "string";
    case Kind::DateValue: return "date";
    case Kind::BaselineList: return "list";
    case Kind::ForwardingValue: return "enum";
  }
  return "?";
}

struct Entry {
  std::string key;
  Kind kind;
  std::string doc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
  bool hashed = true;  // affects results
};

[[noreturn]] void bad_value(const std::string& key, const std::string& value, std::string_view expected) {
  throw UsageError("config key '" + key + "': cannot parse '" + value + "' as " + std::string(expected));
}

template <typename T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!csv::parse_double(v, out)) bad_value(key, v, "a real number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true/false");
}

std::string fmt(double v) { return csv::format_exact(v); }

using Get = std::function<std::string(const RunConfig&)>;
using Set = std::function<void(RunConfig&, const std::string&)>;

template <typename Ref>
Entry integer(std::string key, std::string doc, Ref ref) {
  const std::string k = key;
  return {std::move(key), Kind::Int, std::move(doc),
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
          [ref, k](RunConfig& c, const std::string& v) { ref(c) = parse_integer<int>(k, v); }};
}

template <typename Ref>
Entry size_value(std::string key, std::string doc, Ref ref) {
  const std::string k = key;
  return {std::move(key), Kind::UInt, std::move(doc),
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
          [ref, k](RunConfig& c, const std::string& v) {
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(parse_integer<std::uint64_t>(k, v));
          }};
}

template <typename Ref>
Entry real(std::string key, std::string doc, Ref ref) {
  const std::string k = key;
  return {std::move(key), Kind::Real, std::move(doc),
          [ref](const RunConfig& c) { return fmt(ref(const_cast<RunConfig&>(c))); },
          [ref, k](RunConfig& c, const std::string& v) { ref(c) = parse_real(k, v); }};
}

template <typename Ref>
Entry boolean(std::string key, std::string doc, Ref ref) {
  const std::string k = key;
  return {std::move(key), Kind::Bool, std::move(doc),
          [ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [ref, k](RunConfig& c, const std::string& v) { ref(c) = parse_bool(k, v); }};
}

void add_range(std::vector<Entry>& out, const std::string& prefix, const std::string& doc,
               std::function<Range&(RunConfig&)> ref) {
  out.push_back(real(prefix + "_low", doc + " (lower bound)", [ref](RunConfig& c) -> double& { return ref(c).low; }));
  out.push_back(real(prefix + "_high", doc + " (upper bound)", [ref](RunConfig& c) -> double& { return ref(c).high; }));
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back(size_value("seed", "global seed; every step derives its own substream from it",
                           [](RunConfig& c) -> std::uint64_t& { return c.seed; }));

    e.push_back(integer("synth.n_customers", "number of synthetic customers",
                        [](RunConfig& c) -> int& { return c.synth.n_customers; }));
    e.push_back(integer("synth.n_days", "consecutive days per customer",
                        [](RunConfig& c) -> int& { return c.synth.n_days; }));
    e.push_back({"synth.start_date", Kind::DateValue, "first synthetic day (YYYY-MM-DD)",
                 [](const RunConfig& c) { return c.synth.start_date.iso(); },
                 [](RunConfig& c, const std::string& v) { c.synth.start_date = Date::parse(v); }});
    e.push_back(real("synth.c_max_low", "lower bound of customer C_max, kWh/h",
                     [](RunConfig& c) -> double& { return c.synth.c_max_low; }));
    e.push_back(real("synth.c_max_high", "upper bound of customer C_max, kWh/h",
                     [](RunConfig& c) -> double& { return c.synth.c_max_high; }));
    e.push_back(integer("synth.n_locations", "number of weather locations",
                        [](RunConfig& c) -> int& { return c.synth.n_locations; }));
    e.push_back(real("synth.temp_coefficient", "PV power temperature coefficient, per deg C",
                     [](RunConfig& c) -> double& { return c.synth.temp_coefficient; }));
    e.push_back(real("synth.stc_irradiance", "standard-test-condition irradiance, W/m^2",
                     [](RunConfig& c) -> double& { return c.synth.stc_irradiance; }));

    e.push_back(boolean("ingest.drop_negative_generation", "drop days with a negative generation value",
                        [](RunConfig& c) -> bool& { return c.clean.drop_negative_generation; }));
    e.push_back(boolean("ingest.drop_generation_over_cap", "drop days whose hourly generation exceeds C_max",
                        [](RunConfig& c) -> bool& { return c.clean.drop_generation_over_cap; }));
    e.push_back(boolean("ingest.drop_missing", "drop days with a missing value or meter row",
                        [](RunConfig& c) -> bool& { return c.clean.drop_missing; }));
    e.push_back(boolean("ingest.drop_zero_consumption", "drop days whose consumption is all zero",
                        [](RunConfig& c) -> bool& { return c.clean.drop_zero_consumption; }));

    add_range(e, "attack1.b", "attack 1 positive-reading scale b_t",
              [](RunConfig& c) -> Range& { return c.attacks[0].b_range; });
    add_range(e, "attack1.p", "attack 1 injected fraction of C_max p_t",
              [](RunConfig& c) -> Range& { return c.attacks[0].p_range; });
    e.push_back(integer("attack1.min_window_hours", "attack 1 shortest attack window, hours",
                        [](RunConfig& c) -> int& { return c.attacks[0].min_window_hours; }));
    e.push_back(real("attack2.alpha", "attack 2 positive-reading scale",
                     [](RunConfig& c) -> double& { return c.attacks[1].alpha; }));
    e.push_back(real("attack2.beta", "attack 2 negative-reading scale",
                     [](RunConfig& c) -> double& { return c.attacks[1].beta; }));
    add_range(e, "attack3.alpha", "attack 3 per-slot positive-reading scale",
              [](RunConfig& c) -> Range& { return c.attacks[2].alpha_range; });
    add_range(e, "attack3.beta", "attack 3 per-slot negative-reading scale",
              [](RunConfig& c) -> Range& { return c.attacks[2].beta_range; });
    e.push_back(real("attack3.beta_max", "attack 3 ceiling on beta_t",
                     [](RunConfig& c) -> double& { return c.attacks[2].beta_max; }));
    add_range(e, "attack4.m1", "attack 4 positive-history multiplier M1_t",
              [](RunConfig& c) -> Range& { return c.attacks[3].m1_range; });
    add_range(e, "attack4.m2", "attack 4 negative-history multiplier M2_t",
              [](RunConfig& c) -> Range& { return c.attacks[3].m2_range; });

    e.push_back(real("split.train_fraction", "share of each stratum assigned to training",
                     [](RunConfig& c) -> double& { return c.split.train_fraction; }));
    e.push_back(boolean("split.stratify_by_label", "split each label separately",
                        [](RunConfig& c) -> bool& { return c.split.stratify_by_label; }));

    e.push_back(boolean("adasyn.enabled", "balance the training set with ADASYN",
                        [](RunConfig& c) -> bool& { return c.train.adasyn; }));
    e.push_back(integer("adasyn.k_neighbors", "neighbours considered per minority sample",
                        [](RunConfig& c) -> int& { return c.adasyn.k_neighbors; }));
    e.push_back(real("adasyn.target_ratio", "fraction of the class gap to fill (1 = full balance)",
                     [](RunConfig& c) -> double& { return c.adasyn.target_ratio; }));

    e.push_back(size_value("train.batch_size", "minibatch size",
                           [](RunConfig& c) -> std::size_t& { return c.train.batch_size; }));
    e.push_back(integer("train.max_epochs", "epoch cap for every model without its own cap",
                        [](RunConfig& c) -> int& { return c.train.max_epochs; }));
    e.push_back(integer("train.patience", "early-stopping patience, epochs",
                        [](RunConfig& c) -> int& { return c.train.patience; }));
    e.push_back(real("train.validation_fraction", "share of the training set held out for early stopping",
                     [](RunConfig& c) -> double& { return c.train.validation_fraction; }));
    e.push_back(real("train.learning_rate", "Adam step size",
                     [](RunConfig& c) -> double& { return c.train.adam.learning_rate; }));
    e.push_back(real("train.beta1", "Adam first-moment decay",
                     [](RunConfig& c) -> double& { return c.train.adam.beta1; }));
    e.push_back(real("train.beta2", "Adam second-moment decay",
                     [](RunConfig& c) -> double& { return c.train.adam.beta2; }));
    e.push_back(real("train.epsilon", "Adam denominator offset",
                     [](RunConfig& c) -> double& { return c.train.adam.epsilon; }));
    for (std::size_t m = 0; m < kModelNames.size(); ++m) {
      e.push_back(integer(std::string("train.epochs.") + kModelNames[m],
                          std::string("epoch cap for ") + kModelNames[m] + " (0 = train.max_epochs)",
                          [m](RunConfig& c) -> int& { return c.train.epochs[m]; }));
    }

    e.push_back({"detector.forwarding", Kind::ForwardingValue,
                 "what a stage passes on: probabilities | penultimate",
                 [](const RunConfig& c) { return std::string(to_string(c.forwarding)); },
                 [](RunConfig& c, const std::string& v) { c.forwarding = parse_forwarding(v); }});
    e.push_back({"detector.baselines", Kind::BaselineList, "comma-separated baselines to train (mlp,gru,cnn,cnngru)",
                 [](const RunConfig& c) {
                   std::string s;
                   for (auto b : c.baselines) s += (s.empty() ? "" : ",") + std::string(to_string(b));
                   return s;
                 },
                 [](RunConfig& c, const std::string& v) {
                   c.baselines.clear();
                   for (auto part : csv::split(v, ',')) {
                     if (!part.empty()) c.baselines.push_back(parse_baseline(part));
                   }
                 }});

    e.push_back(size_value("analysis.acf_max_lag", "largest ACF lag reported",
                           [](RunConfig& c) -> std::size_t& { return c.acf_max_lag; }));

    Entry threads = integer("runtime.threads", "worker threads for independent models (results do not depend on it)",
                            [](RunConfig& c) -> int& { return c.threads; });
    threads.hashed = false;
    e.push_back(std::move(threads));
    e.push_back({"paths.run_root", Kind::Text, "directory under which run directories are created",
                 [](const RunConfig& c) { return c.run_root.string(); },
                 [](RunConfig& c, const std::string& v) { c.run_root = v; }, false});
    return e;
  }();
  return entries;
}

const Entry& find_entry(const std::string& key) {
  for (const auto& e : registry()) {
    if (e.key == key) return e;
  }
  throw UsageError("unknown config key '" + key + "' (see --help for the full list)");
}

nlohmann::ordered_json typed(const Entry& e, const std::string& text) {
  switch (e.kind) {
    case Kind::Int: return std::stoll(text);
    case Kind::UInt: return std::stoull(text);
    case Kind::Real: return std::stod(text);
    case Kind::Bool: return text == "true";
    default: return text;
  }
}

void flatten_json(const nlohmann::json& node, const std::string& prefix, RunConfig& config) {
  if (!node.is_object()) throw UsageError("config: expected an object at '" + prefix + "'");
  for (const auto& [k, v] : node.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten_json(v, key, config);
      continue;
    }
    std::string text;
    if (v.is_string()) {
      text = v.get<std::string>();
    } else if (v.is_boolean()) {
      text = v.get<bool>() ? "true" : "false";
    } else if (v.is_number_float()) {
      text = fmt(v.get<double>());
    } else if (v.is_number()) {
      text = v.dump();
    } else if (v.is_array()) {
      for (const auto& item : v) text += (text.empty() ? "" : ",") + item.get<std::string>();
    } else {
      throw UsageError("config key '" + key + "': unsupported value " + v.dump());
    }
    set_config_value(config, key, text);
  }
}

}  // namespace

void RunConfig::finalize() {
  synth.seed = derive_seed(seed, "synth");
  split.seed = derive_seed(seed, "split");
  adasyn.seed = derive_seed(seed, "adasyn");
  validate();
}

void RunConfig::validate() const {
  synth.validate();
  for (int id = 1; id <= 4; ++id) attacks[static_cast<std::size_t>(id - 1)].validate(id);
  split.validate();
  adasyn.validate();
  if (train.batch_size == 0) throw UsageError("train.batch_size must be positive");
  if (train.max_epochs < 1) throw UsageError("train.max_epochs must be >= 1");
  if (train.patience < 1) throw UsageError("train.patience must be >= 1");
  if (!(train.validation_fraction >= 0.0 && train.validation_fraction < 1.0)) {
    throw UsageError("train.validation_fraction must lie in [0, 1)");
  }
  if (!(train.adam.learning_rate > 0.0)) throw UsageError("train.learning_rate must be positive");
  for (std::size_t m = 0; m < train.epochs.size(); ++m) {
    if (train.epochs[m] < 0) throw UsageError(std::string("train.epochs.") + kModelNames[m] + " must be >= 0");
  }
  if (threads < 1) throw UsageError("runtime.threads must be >= 1");
  if (acf_max_lag < 24) throw UsageError("analysis.acf_max_lag must be >= 24");
}

std::size_t model_index(std::string_view name) {
  for (std::size_t i = 0; i < kModelNames.size(); ++i) {
    if (name == kModelNames[i]) return i;
  }
  throw UsageError("unknown model '" + std::string(name) + "'");
}

nn::TrainConfig train_config_for(const RunConfig& config, std::string_view model) {
  const std::size_t i = model_index(model);
  nn::TrainConfig t;
  t.batch_size = config.train.batch_size;
  t.max_epochs = config.train.epochs[i] > 0 ? config.train.epochs[i] : config.train.max_epochs;
  t.patience = config.train.patience;
  t.validation_fraction = config.train.validation_fraction;
  t.adam = config.train.adam;
  t.seed = derive_seed(config.seed, "train");
  return t;
}

std::vector<ConfigKeyInfo> config_keys() {
  const RunConfig defaults;
  std::vector<ConfigKeyInfo> out;
  for (const auto& e : registry()) {
    out.push_back({e.key, std::string(kind_name(e.kind)), e.get(defaults), e.doc});
  }
  return out;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  try {
    find_entry(key).set(config, value);
  } catch (const DataError& e) {
    throw UsageError("config key '" + key + "': " + e.what());
  }
}

std::string get_config_value(const RunConfig& config, const std::string& key) {
  return find_entry(key).get(config);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw UsageError("override '" + assignment + "' must look like key=value");
  }
  set_config_value(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

RunConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  RunConfig config;
  flatten_json(j, "", config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const RunConfig& config) {
  nlohmann::ordered_json root = nlohmann::ordered_json::object();
  for (const auto& e : registry()) {
    nlohmann::ordered_json* node = &root;
    std::string_view key = e.key;
    for (auto dot = key.find('.'); dot != std::string_view::npos; dot = key.find('.')) {
      node = &(*node)[std::string(key.substr(0, dot))];
      key.remove_prefix(dot + 1);
    }
    (*node)[std::string(key)] = typed(e, e.get(config));
  }
  return root.dump(2);
}

std::string config_hash(const RunConfig& config) {
  std::string canon;
  for (const auto& e : registry()) {
    if (e.hashed) canon += e.key + "=" + e.get(config) + "\n";
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canon)));
  return buf;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view step) {
  return splitmix64(seed ^ splitmix64(fnv1a64(step)));
}

}  // namespace nmguard
