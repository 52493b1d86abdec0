#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace lw {

/// Independent random streams derived from one run seed.
enum class Stream : std::uint64_t {
  kInit = 1,
  kFeedback = 2,
  kShuffle = 3,
  kSplit = 4,
  kSynthetic = 5,
};

/// Seeded generator with platform-independent draws.
///
/// std::uniform_real_distribution and std::shuffle are implementation
/// defined, so values are mapped from the raw 64-bit engine output here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

/// Fisher-Yates shuffle driven by `rng`.
template <typename T>
void shuffle(std::span<T> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace lw
