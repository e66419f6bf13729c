#pragma once

// Seeded randomness for every generator and simulator in the library.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The distributions on top of it are implemented here rather than
// taken from <random>, because the standard distributions are not required
// to produce the same values across library implementations. Streams are
// split with SplitMix64 so that a (master seed, stream id...) tuple always
// maps to the same generator state, regardless of execution order.
//
// Stream naming is versioned by kRngVersion; bump it if any of the derived
// sequences change.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace accgossip {

inline constexpr int kRngVersion = 1;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive a child seed from a parent seed and a sequence of stream labels.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                           std::initializer_list<std::uint64_t> labels) noexcept {
  std::uint64_t h = splitmix64(seed ^ 0x6163636f7373ULL);
  for (auto label : labels) h = splitmix64(h ^ splitmix64(label));
  return h;
}

// Stream labels used across the library.
namespace stream {
inline constexpr std::uint64_t kRggPoints = 1;
inline constexpr std::uint64_t kInitialValues = 2;
inline constexpr std::uint64_t kEdgeSampling = 3;
}  // namespace stream

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection; bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % bound;
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace accgossip
