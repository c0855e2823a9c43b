#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace cardionet {

/// Counter-based splittable generator.
///
/// Output i of a stream with key k is splitmix64_mix(k + (i + 1) * 0x9E3779B97F4A7C15),
/// i.e. SplitMix64 evaluated at an explicit counter. A substream key is derived
/// by folding the FNV-1a hash of a label and a list of indices into the parent
/// key, so substreams never depend on how much of any other stream was consumed.
/// All integer and float conversions are defined here; no std:: distributions
/// are used, which keeps streams identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : key_(mix(seed)), seed_(seed) {}

  Rng substream(std::string_view label, std::initializer_list<std::uint64_t> indices = {}) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), unbiased (rejection sampling). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z);
  static std::uint64_t hash_label(std::string_view label);

 private:
  Rng(std::uint64_t key, std::uint64_t seed, int) : key_(key), seed_(seed) {}

  std::uint64_t key_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Deterministic Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

}  // namespace cardionet
