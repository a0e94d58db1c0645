#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace gossipfield {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives the key of child stream `stream` from a parent seed:
///   derive_seed(seed, i) = mix64(mix64(seed) ^ mix64(i + 0x9E3779B97F4A7C15)).
/// Used for replica ensembles, connectivity retries and per-task seeds.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ mix64(stream + 0x9E3779B97F4A7C15ULL));
}

/// Counter-based 64-bit generator. The i-th draw (i = 1, 2, ...) of the stream
/// keyed by `key` is mix64(key + i * 0x9E3779B97F4A7C15), so any draw can be
/// reproduced from (key, i) alone, independent of compiler or standard library.
/// All derived variates below use fixed, documented transforms for the same reason;
/// <random> distributions are implementation-defined and are not used.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ + (++counter_) * kGamma); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Exponential with the given rate, by inversion: -log(1 - U) / rate.
  double exponential(double rate);

  /// Uniform integer in [0, bound) by rejection of the biased low range.
  std::uint64_t below(std::uint64_t bound);

  /// Poisson(mean) by sequential inversion; means above 500 are split into
  /// independent chunks of at most 500.
  std::uint64_t poisson(double mean);

  /// Independent child stream keyed by derive_seed(key, stream).
  CounterRng split(std::uint64_t stream) const noexcept { return CounterRng(derive_seed(key_, stream)); }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t draws() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Walker/Vose alias table: O(1) categorical sampling with one `below` and one
/// `uniform` draw per sample.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::size_t sample(CounterRng& rng) const;
  std::size_t size() const noexcept { return prob_.size(); }
  double total_weight() const noexcept { return total_; }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
  double total_ = 0.0;
};

/// Fisher-Yates shuffle driven by CounterRng::below.
template <typename T>
void shuffle(std::vector<T>& values, CounterRng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace gossipfield
