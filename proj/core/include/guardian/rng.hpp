#pragma once

#include <cstdint>
#include <random>

namespace guardian {

/// Deterministic 64-bit generator with platform-independent real draws.
///
/// std::uniform_real_distribution is implementation-defined, so uniform
/// reals are produced directly from the top 53 bits of the engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named component streams derived from one scenario seed.
enum class Stream : std::uint64_t {
  Attack = 1,
  Disturbance = 2,
  MonteCarlo = 3,
  Training = 4,
  Dataset = 5,
  Initial = 6,
};

/// Seed of substream `s` (optionally indexed, e.g. per rollout):
/// splitmix64(splitmix64(seed ^ s) + index).
inline std::uint64_t substream_seed(std::uint64_t seed, Stream s, std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ static_cast<std::uint64_t>(s)) + index);
}

}  // namespace guardian
