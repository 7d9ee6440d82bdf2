#pragma once

#include <cstdint>
#include <random>

namespace coopdetect {

// Seeded generator whose derived draws do not depend on the standard
// library's distribution implementations, so traces are reproducible across
// toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Independent stream for a (seed, purpose, index) triple.
  static Rng stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index = 0) {
    return Rng(mix(mix(seed ^ 0x9e3779b97f4a7c15ULL) ^ mix(purpose + 0x632be59bd9b4e019ULL) ^ (index * 0xbf58476d1ce4e5b9ULL)));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform in (lo, hi].
  double uniform_left_open(double lo, double hi) { return hi - (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection keeps the draw unbiased.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01() < p;
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

// Stream purposes.
namespace rng_purpose {
inline constexpr std::uint64_t kPlacement = 1;
inline constexpr std::uint64_t kMobility = 2;
inline constexpr std::uint64_t kMac = 3;
inline constexpr std::uint64_t kAdversary = 4;
inline constexpr std::uint64_t kMonitor = 5;
inline constexpr std::uint64_t kChannel = 6;
inline constexpr std::uint64_t kNonce = 7;
inline constexpr std::uint64_t kRoles = 8;
inline constexpr std::uint64_t kFlows = 9;
}  // namespace rng_purpose

}  // namespace coopdetect
