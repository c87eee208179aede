#include "nmguard/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "nmguard/error.hpp"

namespace nmguard {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

AttackTrace start_trace(const DaySeries& day, int attack_id) {
  AttackTrace trace;
  trace.original = day;
  trace.reported = day;
  trace.attack_id = attack_id;
  trace.draws.assign(day.readings.size(), SlotDraw{kNaN, kNaN});
  return trace;
}

void require(bool ok, int attack_id, const std::string& what) {
  if (!ok) throw UsageError("attack " + std::to_string(attack_id) + ": " + what);
}

// Table-I scaling for one slot given the two factors in effect.
double scale_slot(double tr, double down, double up, double c_max) {
  if (tr > 0.0) return down * tr;
  if (tr < 0.0) return -std::min(std::abs(up * tr), c_max);
  return tr;
}

}  // namespace

void AttackParams::validate(int attack_id) const {
  auto inside = [](const Range& r, double lo, double hi, bool lo_open, bool hi_open) {
    const bool lo_ok = lo_open ? r.low > lo : r.low >= lo;
    const bool hi_ok = hi_open ? r.high < hi : r.high <= hi;
    return r.low <= r.high && lo_ok && hi_ok;
  };
  switch (attack_id) {
    case 1:
      require(inside(b_range, 0.0, 1.0, false, true), 1, "b_range must lie in [0, 1)");
      require(inside(p_range, 0.0, 1.0, true, false), 1, "p_range must lie in (0, 1]");
      require(min_window_hours >= 1 && min_window_hours <= 24, 1, "min_window_hours must be in [1, 24]");
      break;
    case 2:
      require(alpha >= 0.0 && alpha < 1.0, 2, "alpha must satisfy 0 <= alpha < 1");
      require(beta > 1.0, 2, "beta must be > 1");
      break;
    case 3:
      require(inside(alpha_range, 0.0, 1.0, false, true), 3, "alpha_range must lie in [0, 1)");
      require(inside(beta_range, 1.0, beta_max, true, false), 3, "beta_range must lie in (1, beta_max]");
      break;
    case 4:
      require(inside(m1_range, 0.95, 1.0, false, true), 4, "m1_range must lie in [0.95, 1)");
      require(inside(m2_range, 1.0, 1.05, true, false), 4, "m2_range must lie in (1, 1.05]");
      break;
    default:
      throw UsageError("attack id must be 1-4, got " + std::to_string(attack_id));
  }
}

AttackTrace attack1_intermittent(const DaySeries& day, const CustomerProfile& profile,
                                 const AttackParams& params, Rng& rng) {
  AttackTrace trace = start_trace(day, 1);
  const auto n = static_cast<int>(day.readings.size());
  const int min_len = std::clamp(params.min_window_hours, 1, n);
  const int len = min_len + static_cast<int>(rng.below(static_cast<std::size_t>(n - min_len + 1)));
  trace.window_start = static_cast<int>(rng.below(static_cast<std::size_t>(n - len + 1)));
  trace.window_end = trace.window_start + len - 1;
  for (int t = trace.window_start; t <= trace.window_end; ++t) {
    const auto s = static_cast<std::size_t>(t);
    const double b = params.b_range.draw(rng);
    const double p = params.p_range.draw(rng);
    trace.draws[s] = {b, p};
    const double tr = day.readings[s];
    if (tr > 0.0) {
      trace.reported.readings[s] = b * tr;
    } else if (tr < 0.0) {
      trace.reported.readings[s] = -std::max(p * profile.c_max, std::abs(tr));
    }
  }
  return trace;
}

AttackTrace attack2_fixed_scaling(const DaySeries& day, const CustomerProfile& profile,
                                  const AttackParams& params) {
  AttackTrace trace = start_trace(day, 2);
  for (std::size_t t = 0; t < day.readings.size(); ++t) {
    trace.draws[t] = {params.alpha, params.beta};
    trace.reported.readings[t] = scale_slot(day.readings[t], params.alpha, params.beta, profile.c_max);
  }
  return trace;
}

AttackTrace attack3_time_scaling(const DaySeries& day, const CustomerProfile& profile,
                                 const AttackParams& params, Rng& rng) {
  AttackTrace trace = start_trace(day, 3);
  for (std::size_t t = 0; t < day.readings.size(); ++t) {
    const double a = params.alpha_range.draw(rng);
    const double b = params.beta_range.draw(rng);
    trace.draws[t] = {a, b};
    trace.reported.readings[t] = scale_slot(day.readings[t], a, b, profile.c_max);
  }
  return trace;
}

AttackTrace attack4_history(const DaySeries& day, const CustomerProfile& profile,
                            const AttackParams& params, Rng& rng) {
  AttackTrace trace = start_trace(day, 4);
  double last_positive = std::numeric_limits<double>::infinity();
  double last_negative = 0.0;
  for (std::size_t t = 0; t < day.readings.size(); ++t) {
    const double m1 = params.m1_range.draw(rng);
    const double m2 = params.m2_range.draw(rng);
    trace.draws[t] = {m1, m2};
    const double tr = day.readings[t];
    if (tr > 0.0) {
      last_positive = m1 * std::min(last_positive, tr);
      trace.reported.readings[t] = last_positive;
    } else if (tr < 0.0) {
      last_negative = -std::min(m2 * std::max(std::abs(last_negative), std::abs(tr)), profile.c_max);
      trace.reported.readings[t] = last_negative;
    }
  }
  return trace;
}

Rng attack_rng(std::uint64_t seed, const DaySeries& day, int attack_id) {
  return Rng::derive(seed, {fnv1a64(day.customer_id), static_cast<std::uint64_t>(day.date.serial()),
                            static_cast<std::uint64_t>(attack_id)});
}

AttackTrace run_attack(int attack_id, const DaySeries& day, const CustomerProfile& profile,
                       const AttackParams& params, std::uint64_t seed) {
  Rng rng = attack_rng(seed, day, attack_id);
  switch (attack_id) {
    case 1: return attack1_intermittent(day, profile, params, rng);
    case 2: return attack2_fixed_scaling(day, profile, params);
    case 3: return attack3_time_scaling(day, profile, params, rng);
    case 4: return attack4_history(day, profile, params, rng);
    default: break;
  }
  throw UsageError("attack id must be 1-4, got " + std::to_string(attack_id));
}

double bill(std::span<const double> readings, double tariff) {
  double total = 0.0;
  for (double r : readings) total += r;
  return tariff * total;
}

std::optional<std::string> check_financial_gain(const AttackTrace& trace, const CustomerProfile& profile) {
  const auto& tr = trace.original.readings;
  const auto& rep = trace.reported.readings;
  const std::string where = "attack " + std::to_string(trace.attack_id) + " on " +
                            trace.original.customer_id + " " + trace.original.date.iso();
  if (tr.size() != rep.size()) return where + ": reported length differs from original";
  bool any_nonzero = false;
  for (std::size_t t = 0; t < tr.size(); ++t) {
    any_nonzero = any_nonzero || tr[t] != 0.0;
    if (rep[t] > tr[t]) {
      return where + ": slot " + std::to_string(t) + " reports " + std::to_string(rep[t]) +
             " above true " + std::to_string(tr[t]);
    }
    if (rep[t] < -profile.c_max) {
      return where + ": slot " + std::to_string(t) + " reports below -c_max";
    }
  }
  if (trace.attack_id >= 2 && any_nonzero && !(bill(rep) < bill(tr))) {
    return where + ": bill not reduced";
  }
  return std::nullopt;
}

std::vector<AttackTrace> build_malicious_dataset(std::span<const DaySeries> benign,
                                                 std::span<const CustomerProfile> profiles,
                                                 const std::array<AttackParams, 4>& params,
                                                 std::uint64_t seed) {
  for (int id = 1; id <= 4; ++id) params[static_cast<std::size_t>(id - 1)].validate(id);
  std::map<std::string, const CustomerProfile*> by_id;
  for (const auto& p : profiles) by_id[p.customer_id] = &p;

  std::vector<AttackTrace> traces;
  traces.reserve(4 * benign.size());
  for (const auto& day : benign) {
    const auto it = by_id.find(day.customer_id);
    if (it == by_id.end()) throw DataError("no profile for customer " + day.customer_id);
    for (int id = 1; id <= 4; ++id) {
      AttackTrace trace = run_attack(id, day, *it->second, params[static_cast<std::size_t>(id - 1)], seed);
      if (auto problem = check_financial_gain(trace, *it->second)) {
        throw DataError("financial-gain invariant violated: " + *problem);
      }
      traces.push_back(std::move(trace));
    }
  }
  return traces;
}

void write_attack_audit(const std::filesystem::path& path, std::span<const AttackTrace> traces) {
  using nlohmann::json;
  auto finite_or_null = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  json log = json::array();
  for (const auto& t : traces) {
    json slots = json::array();
    for (const auto& d : t.draws) slots.push_back({finite_or_null(d.first), finite_or_null(d.second)});
    json entry = {{"customer_id", t.original.customer_id},
                  {"date", t.original.date.iso()},
                  {"attack_id", t.attack_id},
                  {"original", t.original.readings},
                  {"reported", t.reported.readings},
                  {"draws", slots}};
    if (t.attack_id == 1) entry["window"] = {t.window_start, t.window_end};
    log.push_back(std::move(entry));
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << log.dump(1) << '\n';
}

}  // namespace nmguard
