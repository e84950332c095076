#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace osnlab {

/// splitmix64 step; used to derive independent stream seeds from one base seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base ^ (stream * 0xD6E8FEB86659FD93ULL);
  return splitmix64(s);
}

/// Seedable generator with explicit, platform-stable draw helpers.
/// mt19937_64 output is fixed by the standard; the bounded/unit draws below
/// avoid std::*_distribution so sequences do not depend on the stdlib.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, n). Masked rejection; n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    if ((n & (n - 1)) == 0) return engine_() & (n - 1);
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    std::uint64_t x;
    do {
      x = engine_() & mask;
    } while (x >= n);
    return x;
  }

  /// Uniform in [0, 2^bits); bits in [1, 64].
  std::uint64_t bits(unsigned bit_count) {
    if (bit_count >= 64) return engine_();
    return engine_() >> (64 - bit_count);
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return unit() < p; }

  /// Fisher-Yates; stable across platforms (uses below()).
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace osnlab
