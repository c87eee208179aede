#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace nmguard {

/// Seeded random source used everywhere in the pipeline.
///
/// The bit stream is std::mt19937_64 (its output sequence is fixed by the C++
/// standard). Floating-point draws are defined here rather than through the
/// std distributions, whose algorithms vary between standard libraries:
///
///   uniform01()  = (next() >> 11) * 2^-53            in [0, 1)
///   uniform(a,b) = a + (b - a) * uniform01()
///   below(n)     = floor(uniform01() * n)            in [0, n)
///   normal()     = Box-Muller on two uniform01 draws, cosine branch only
///
/// Independent substreams are keyed by hashing (seed, key...) with SplitMix64,
/// so work split across customers, days or attacks is schedule independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Substream for an ordered tuple of keys.
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  std::uint64_t next() { return engine_(); }
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::size_t below(std::size_t n);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a 64-bit, used to turn opaque string identifiers into substream keys.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace nmguard
