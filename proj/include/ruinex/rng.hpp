#pragma once

#include <cstdint>
#include <random>

namespace ruinex {

namespace detail {
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// (master seed, stream index). Identical pairs reproduce identical draws;
/// distinct indices give independent substreams.
struct SeedStream {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;

  /// Deterministic sub-stream, e.g. one per chunk of paths.
  [[nodiscard]] constexpr SeedStream child(std::uint64_t k) const {
    return {seed, detail::splitmix64(index ^ detail::splitmix64(k + 0x51ED27ULL))};
  }

  friend constexpr bool operator==(const SeedStream&, const SeedStream&) = default;
};

/// Per-stream generator. Not shared between threads.
class Rng {
 public:
  explicit Rng(SeedStream s) {
    std::seed_seq seq{static_cast<std::uint32_t>(s.seed),
                      static_cast<std::uint32_t>(s.seed >> 32),
                      static_cast<std::uint32_t>(s.index),
                      static_cast<std::uint32_t>(s.index >> 32)};
    engine_.seed(seq);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace ruinex
