#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace hypergibbs {

using Seed = std::uint64_t;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for substream `index` of `seed`. Distinct (seed, index) pairs give
/// statistically independent streams; the mapping never depends on thread count.
inline constexpr Seed derive_seed(Seed seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline constexpr Seed derive_seed(Seed seed, std::uint64_t tag, std::uint64_t index) {
  return derive_seed(derive_seed(seed, tag), index);
}

// Substream tags.
enum : std::uint64_t {
  kTagGraph = 1,
  kTagPotentials = 2,
  kTagNodes = 3,
  kTagEdges = 4,
  kTagSamples = 5,
  kTagShards = 6,
  kTagTrials = 7,
};

class Rng {
 public:
  explicit Rng(Seed seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Floor of a 53-bit uniform; bias is below n / 2^53.
  std::size_t below(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// Index drawn with the given probabilities (assumed to sum to one).
  std::size_t categorical(std::span<const double> probabilities) {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probabilities.size(); ++i) {
      acc += probabilities[i];
      if (u < acc) return i;
    }
    return probabilities.size() - 1;
  }

  /// Standard normal via Box-Muller; used only for direction sampling.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hypergibbs
