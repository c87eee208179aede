#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmguard/rng.hpp"
#include "nmguard/types.hpp"

namespace nmguard {

struct Range {
  double low = 0.0;
  double high = 0.0;

  double draw(Rng& rng) const { return rng.uniform(low, high); }
  friend bool operator==(const Range&, const Range&) = default;
};

/// Knobs for the four false-reading attacks. Each attack reads only its own
/// fields: 1 uses b/p/min_window_hours, 2 uses alpha/beta, 3 uses the alpha and
/// beta ranges, 4 uses the m1/m2 ranges.
struct AttackParams {
  Range b_range{0.1, 0.8};
  Range p_range{0.7, 1.0};
  double alpha = 0.5;
  double beta = 1.5;
  Range alpha_range{0.1, 0.8};
  Range beta_range{1.2, 2.0};
  double beta_max = 10.0;
  Range m1_range{0.95, 0.999};
  Range m2_range{1.001, 1.05};
  int min_window_hours = 4;

  /// Throws UsageError when a constraint is violated for `attack_id`.
  void validate(int attack_id) const;
};

/// What an attack drew for one slot. Unused entries stay NaN.
/// attack 1: (b_t, p_t); attack 2: (alpha, beta); attack 3: (alpha_t, beta_t);
/// attack 4: (M1_t, M2_t).
struct SlotDraw {
  double first;
  double second;
};

struct AttackTrace {
  DaySeries original;
  DaySeries reported;
  int attack_id = 0;
  int window_start = -1;  // attack 1 only
  int window_end = -1;
  std::vector<SlotDraw> draws;
};

// Draw order (fixed, so a slot-by-slot reference can replay the stream):
//   attack 1: L = min_window + below(24 - min_window + 1); t_s = below(24 - L + 1);
//             then for t in [t_s, t_e]: b_t, p_t.
//   attack 3: for t in 0..23: alpha_t, beta_t.
//   attack 4: for t in 0..23: M1_t, M2_t.
// Zero readings pass through unchanged; draws are still consumed.

AttackTrace attack1_intermittent(const DaySeries& day, const CustomerProfile& profile,
                                 const AttackParams& params, Rng& rng);
AttackTrace attack2_fixed_scaling(const DaySeries& day, const CustomerProfile& profile,
                                  const AttackParams& params);
AttackTrace attack3_time_scaling(const DaySeries& day, const CustomerProfile& profile,
                                 const AttackParams& params, Rng& rng);
/// History-based: PR starts at +inf and NR at 0; both track reported values.
/// Negative reports are clamped to -c_max.
AttackTrace attack4_history(const DaySeries& day, const CustomerProfile& profile,
                            const AttackParams& params, Rng& rng);

/// Per-day substream keyed by (seed, customer, date, attack).
Rng attack_rng(std::uint64_t seed, const DaySeries& day, int attack_id);

AttackTrace run_attack(int attack_id, const DaySeries& day, const CustomerProfile& profile,
                       const AttackParams& params, std::uint64_t seed);

/// Net-metering bill: tariff * sum(readings); negative readings earn credit.
double bill(std::span<const double> readings, double tariff = 1.0);

/// Empty when the trace respects slot-wise billing order, the -c_max bound,
/// and (attacks 2-4) strictly lowers the bill of a day with a nonzero reading.
std::optional<std::string> check_financial_gain(const AttackTrace& trace, const CustomerProfile& profile);

/// Four traces per benign day, attack ids 1..4 in order. Aborts with
/// DataError on the first trace that fails check_financial_gain.
std::vector<AttackTrace> build_malicious_dataset(std::span<const DaySeries> benign,
                                                 std::span<const CustomerProfile> profiles,
                                                 const std::array<AttackParams, 4>& params,
                                                 std::uint64_t seed);

/// JSON audit log with the window and per-slot draws of every trace.
void write_attack_audit(const std::filesystem::path& path, std::span<const AttackTrace> traces);

}  // namespace nmguard
