#include "nmguard/prep.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "nmguard/error.hpp"
#include "nmguard/rng.hpp"

namespace nmguard {

namespace {

constexpr int kDayCodes = 7;
constexpr int kSeasonCodes = 4;

void fisher_yates(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

void append_u64(std::string& bytes, std::uint64_t x) {
  for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((x >> (8 * b)) & 0xffU));
}

}  // namespace

std::vector<FeatureSample> assemble_samples(std::span<const LabeledDay> days,
                                            std::span<const WeatherDay> weather,
                                            std::span<const CustomerProfile> profiles) {
  std::map<std::string, const CustomerProfile*> by_id;
  for (const auto& p : profiles) by_id[p.customer_id] = &p;
  std::map<std::pair<std::string, Date>, const WeatherDay*> wx;
  for (const auto& w : weather) wx[{w.location_id, w.date}] = &w;

  std::set<std::pair<std::string, Date>> missing;
  std::vector<FeatureSample> out;
  out.reserve(days.size());
  for (const auto& ld : days) {
    const auto& day = ld.day;
    const auto p = by_id.find(day.customer_id);
    if (p == by_id.end()) throw DataError("no profile for customer " + day.customer_id);
    if (day.readings.size() != kHoursPerDay) {
      throw DataError("day " + day.customer_id + " " + day.date.iso() + " has " +
                      std::to_string(day.readings.size()) + " readings, expected 24");
    }
    const auto w = wx.find({p->second->location_id, day.date});
    if (w == wx.end()) {
      missing.insert({p->second->location_id, day.date});
      continue;
    }
    FeatureSample s;
    std::copy(day.readings.begin(), day.readings.end(), s.features.begin() + kReadingsOffset);
    std::copy(w->second->irradiance.begin(), w->second->irradiance.end(),
              s.features.begin() + kIrradianceOffset);
    std::copy(w->second->temperature.begin(), w->second->temperature.end(),
              s.features.begin() + kTemperatureOffset);
    const DaySeason ds = encode_day_season(day.date);
    s.features[kCmaxIndex] = p->second->c_max;
    s.features[kDayIndex] = ds.day;
    s.features[kSeasonIndex] = ds.season;
    s.provenance = ld.provenance;
    s.label = ld.provenance.label();
    out.push_back(s);
  }
  if (!missing.empty()) {
    std::string msg = "missing weather for " + std::to_string(missing.size()) + " (location, date) key(s):";
    std::size_t shown = 0;
    for (const auto& [loc, date] : missing) {
      if (shown++ == 20) {
        msg += " ...";
        break;
      }
      msg += " (" + loc + ", " + date.iso() + ")";
    }
    throw DataError(msg);
  }
  return out;
}

void SplitConfig::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw UsageError("split.train_fraction must lie strictly between 0 and 1");
  }
}

SplitIndices split_indices(std::span<const FeatureSample> samples, const SplitConfig& config) {
  config.validate();
  std::array<std::vector<std::size_t>, 2> strata;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t s = config.stratify_by_label ? static_cast<std::size_t>(samples[i].label) : 0;
    strata[s].push_back(i);
  }
  SplitIndices out;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto& idx = strata[s];
    if (idx.empty() && config.stratify_by_label) continue;
    if (idx.size() < 3) {
      throw DataError("split stratum " + std::string(to_string(static_cast<Label>(s))) + " has " +
                      std::to_string(idx.size()) + " samples; at least 3 are required");
    }
    Rng rng = Rng::derive(config.seed, {0x73706c6974ULL, s});
    fisher_yates(idx, rng);
    const auto n_train = static_cast<std::size_t>(std::llround(config.train_fraction * double(idx.size())));
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

SplitResult split(std::span<const FeatureSample> samples, const SplitConfig& config) {
  const SplitIndices idx = split_indices(samples, config);
  SplitResult out;
  out.train.reserve(idx.train.size());
  out.test.reserve(idx.test.size());
  for (auto i : idx.train) out.train.push_back(samples[i]);
  for (auto i : idx.test) out.test.push_back(samples[i]);
  return out;
}

Normalizer Normalizer::fit(std::span<const FeatureSample> train) {
  if (train.empty()) throw DataError("cannot fit a normalizer on an empty training set");
  Normalizer n;
  n.min_ = train.front().features;
  n.max_ = train.front().features;
  for (const auto& s : train) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      n.min_[f] = std::min(n.min_[f], s.features[f]);
      n.max_[f] = std::max(n.max_[f], s.features[f]);
    }
  }
  n.fitted_ = true;
  return n;
}

double Normalizer::apply(std::size_t f, double x) const {
  const double range = max_[f] - min_[f];
  return range > 0.0 ? (x - min_[f]) / range : 0.0;
}

double Normalizer::invert(std::size_t f, double y) const {
  const double range = max_[f] - min_[f];
  return range > 0.0 ? min_[f] + y * range : min_[f];
}

FeatureSample Normalizer::transform(const FeatureSample& sample) const {
  if (!fitted_) throw UsageError("normalizer used before fitting");
  FeatureSample out = sample;
  for (std::size_t f = 0; f < kFeatureCount; ++f) out.features[f] = apply(f, sample.features[f]);
  return out;
}

std::vector<FeatureSample> Normalizer::transform(std::span<const FeatureSample> samples) const {
  std::vector<FeatureSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(transform(s));
  return out;
}

std::string Normalizer::fingerprint() const {
  std::string bytes;
  for (double v : min_) append_u64(bytes, std::bit_cast<std::uint64_t>(v));
  for (double v : max_) append_u64(bytes, std::bit_cast<std::uint64_t>(v));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string Normalizer::to_json() const {
  if (!fitted_) throw UsageError("cannot serialize an unfitted normalizer");
  nlohmann::json j = {{"format", "nmguard-normalizer/1"},
                      {"min", min_},
                      {"max", max_},
                      {"fingerprint", fingerprint()}};
  return j.dump(1);
}

Normalizer Normalizer::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("normalizer JSON: ") + e.what());
  }
  if (j.value("format", "") != "nmguard-normalizer/1") throw DataError("normalizer JSON: unknown format");
  Normalizer n;
  try {
    const auto mins = j.at("min").get<std::vector<double>>();
    const auto maxs = j.at("max").get<std::vector<double>>();
    if (mins.size() != kFeatureCount || maxs.size() != kFeatureCount) {
      throw DataError("normalizer JSON: expected 75 min/max pairs");
    }
    std::copy(mins.begin(), mins.end(), n.min_.begin());
    std::copy(maxs.begin(), maxs.end(), n.max_.begin());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("normalizer JSON: ") + e.what());
  }
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (!(n.min_[f] <= n.max_[f])) throw DataError("normalizer JSON: min > max at feature " + std::to_string(f));
  }
  n.fitted_ = true;
  if (j.contains("fingerprint") && j["fingerprint"] != n.fingerprint()) {
    throw DataError("normalizer JSON: fingerprint does not match its parameters");
  }
  return n;
}

void Normalizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << to_json() << '\n';
}

Normalizer Normalizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

NormalizeResult fit_transform_normalize(std::span<const FeatureSample> train,
                                        std::span<const FeatureSample> test) {
  NormalizeResult r;
  r.normalizer = Normalizer::fit(train);
  r.train = r.normalizer.transform(train);
  r.test = r.normalizer.transform(test);
  return r;
}

void AdasynConfig::validate() const {
  if (k_neighbors < 1) throw UsageError("adasyn.k_neighbors must be >= 1");
  if (!(target_ratio > 0.0 && target_ratio <= 1.0)) throw UsageError("adasyn.target_ratio must lie in (0, 1]");
}

std::array<std::size_t, 2> class_counts(std::span<const FeatureSample> samples) {
  std::array<std::size_t, 2> c{0, 0};
  for (const auto& s : samples) ++c[static_cast<std::size_t>(s.label)];
  return c;
}

AdasynResult adasyn(std::span<const FeatureSample> train, const AdasynConfig& config,
                    const Normalizer* normalizer) {
  config.validate();
  const auto counts = class_counts(train);
  if (counts[0] == 0 || counts[1] == 0) throw DataError("ADASYN needs both classes in the training set");

  AdasynResult result;
  result.minority = counts[0] <= counts[1] ? Label::Benign : Label::Malicious;
  const auto minority_n = counts[static_cast<std::size_t>(result.minority)];
  const auto majority_n = train.size() - minority_n;
  const auto k = static_cast<std::size_t>(config.k_neighbors);
  if (minority_n <= k) {
    throw DataError("ADASYN needs more minority samples (" + std::to_string(minority_n) +
                    ") than k_neighbors (" + std::to_string(k) + ")");
  }
  result.samples.assign(train.begin(), train.end());
  const auto to_generate =
      static_cast<std::size_t>(std::llround(double(majority_n - minority_n) * config.target_ratio));

  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].label == result.minority) minority.push_back(i);
  }
  result.allocation.assign(minority.size(), 0);
  if (to_generate == 0) return result;

  // k nearest neighbours of each minority point over the whole training set,
  // squared distances from one GEMM per block; ties broken by lower index.
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto n = static_cast<Eigen::Index>(train.size());
  const auto d = static_cast<Eigen::Index>(kFeatureCount);
  Matrix all(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index f = 0; f < d; ++f) all(i, f) = train[static_cast<std::size_t>(i)].features[static_cast<std::size_t>(f)];
  }
  const Eigen::VectorXd norms = all.rowwise().squaredNorm();

  std::vector<std::vector<std::size_t>> minority_neighbours(minority.size());
  std::vector<double> weight(minority.size(), 0.0);
  constexpr std::size_t kBlock = 128;
  std::vector<std::pair<double, std::size_t>> best;
  for (std::size_t b0 = 0; b0 < minority.size(); b0 += kBlock) {
    const std::size_t bn = std::min(kBlock, minority.size() - b0);
    Matrix block(static_cast<Eigen::Index>(bn), d);
    for (std::size_t r = 0; r < bn; ++r) block.row(static_cast<Eigen::Index>(r)) = all.row(static_cast<Eigen::Index>(minority[b0 + r]));
    const Matrix cross = block * all.transpose();
    for (std::size_t r = 0; r < bn; ++r) {
      const std::size_t self = minority[b0 + r];
      best.clear();
      for (std::size_t j = 0; j < train.size(); ++j) {
        if (j == self) continue;
        const double dist = norms[static_cast<Eigen::Index>(self)] + norms[static_cast<Eigen::Index>(j)] -
                            2.0 * cross(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
        const std::pair<double, std::size_t> cand{dist, j};
        if (best.size() == k && !(cand < best.back())) continue;
        auto pos = std::upper_bound(best.begin(), best.end(), cand);
        best.insert(pos, cand);
        if (best.size() > k) best.pop_back();
      }
      std::size_t majority_count = 0;
      for (const auto& [dist, j] : best) {
        if (train[j].label == result.minority) {
          minority_neighbours[b0 + r].push_back(j);
        } else {
          ++majority_count;
        }
      }
      weight[b0 + r] = static_cast<double>(majority_count) / static_cast<double>(k);
    }
  }

  // Points with no minority neighbour cannot interpolate; their share goes to
  // the rest. If every weight vanishes, fall back to uniform over usable points.
  double total = 0.0;
  std::size_t usable = 0;
  for (std::size_t i = 0; i < minority.size(); ++i) {
    if (minority_neighbours[i].empty()) weight[i] = 0.0;
    total += weight[i];
    usable += minority_neighbours[i].empty() ? 0 : 1;
  }
  if (usable == 0) throw DataError("ADASYN: no minority point has a minority neighbour; cannot allocate");
  if (total == 0.0) {
    for (std::size_t i = 0; i < minority.size(); ++i) weight[i] = minority_neighbours[i].empty() ? 0.0 : 1.0;
    total = static_cast<double>(usable);
  }

  // Largest-remainder apportionment of the synthetic budget.
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < minority.size(); ++i) {
    const double share = double(to_generate) * weight[i] / total;
    const auto whole = static_cast<std::size_t>(std::floor(share));
    result.allocation[i] = whole;
    assigned += whole;
    if (weight[i] > 0.0) remainders.push_back({share - double(whole), i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < to_generate; r = (r + 1) % remainders.size(), ++assigned) {
    ++result.allocation[remainders[r].second];
  }

  auto snap = [&](std::size_t feature, double value, int codes) {
    if (normalizer == nullptr) {
      return std::clamp(std::round(value), 0.0, double(codes - 1));
    }
    const double raw = std::clamp(std::round(normalizer->invert(feature, value)), 0.0, double(codes - 1));
    return normalizer->apply(feature, raw);
  };

  Rng rng = Rng::derive(config.seed, {0x616461737976ULL});
  result.records.reserve(to_generate);
  result.samples.reserve(train.size() + to_generate);
  for (std::size_t i = 0; i < minority.size(); ++i) {
    const auto& base = train[minority[i]];
    const auto& nbrs = minority_neighbours[i];
    for (std::size_t g = 0; g < result.allocation[i]; ++g) {
      const std::size_t z = nbrs[rng.below(nbrs.size())];
      const double lambda = rng.uniform01();
      AdasynRecord rec{minority[i], z, lambda, {}};
      FeatureSample s;
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        rec.unrounded[f] = base.features[f] + lambda * (train[z].features[f] - base.features[f]);
      }
      s.features = rec.unrounded;
      s.features[kDayIndex] = snap(kDayIndex, s.features[kDayIndex], kDayCodes);
      s.features[kSeasonIndex] = snap(kSeasonIndex, s.features[kSeasonIndex], kSeasonCodes);
      s.label = result.minority;
      s.provenance = Provenance::adasyn();
      result.samples.push_back(s);
      result.records.push_back(rec);
    }
  }
  return result;
}

}  // namespace nmguard
