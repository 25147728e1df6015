#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace mimic {

// Seeded random source whose output is identical on every standard library.
//
// std::mt19937_64 is fully specified by the standard, but the distributions
// (uniform_real_distribution, normal_distribution, shuffle) are not, so the
// transforms on top of the raw engine are written out here:
//   uniform01  = (engine() >> 11) * 2^-53, in [0, 1)
//   normal     = Box-Muller on two uniforms, cosine branch only (one engine
//                pair per normal draw, no cached second value)
//   shuffle    = Fisher-Yates from the back, index = uniform01 * (i + 1)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal(double mean = 0.0, double stddev = 1.0) {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t index_below(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index_below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Derives independent stream seeds from one master seed (splitmix64 finalizer).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mimic
