#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace mc {

// Portable seeded generator. std::mt19937_64 output is fixed by the standard;
// the distributions below are written out so that results do not depend on
// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  // Knuth's product method on chunks of mean <= 30, using Poisson additivity
  // so large means do not underflow.
  std::uint64_t poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    const int chunks = static_cast<int>(std::ceil(mean / 30.0));
    const double part = mean / chunks;
    const double limit = std::exp(-part);
    std::uint64_t total = 0;
    for (int c = 0; c < chunks; ++c) {
      double prod = uniform();
      while (prod > limit) {
        ++total;
        prod *= uniform();
      }
    }
    return total;
  }

  // Box-Muller; one value per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Sub-seed for a named component, derived from the single run seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view component) {
  return splitmix64(base ^ fnv1a(component));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 0x5851F42D4C957F2DULL));
}

}  // namespace mc
