#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace xcorpus {

/// 64-bit FNV-1a hash.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Mixes a root seed with a stage label into an independent child seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label) noexcept;

/**
 * SplitMix64 with its own bounded, uniform and normal draws, identical on
 * every standard library. Bump kVersion if any output sequence changes.
 */
class Rng {
 public:
  static constexpr std::string_view kName = "splitmix64";
  static constexpr int kVersion = 1;

  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() noexcept;
  /// Uniform integer in [0, bound); bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Standard normal via Box-Muller (no cached second value).
  double normal() noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Child generator whose stream is independent of this one's position.
  Rng split(std::string_view label) const noexcept { return Rng(derive_seed(state_, label)); }

 private:
  std::uint64_t state_;
};

/// Seeded Fisher-Yates shuffle.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace xcorpus
