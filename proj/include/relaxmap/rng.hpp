#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace relaxmap {

// mt19937_64 with hand-rolled distributions. The standard distributions are
// implementation-defined, which would make patterns and noise differ across
// standard libraries for the same seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed)
    : engine_{seed}
  {
  }

  // Uniform in [0, 1).
  auto uniform() -> double { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  auto uniform(double lo, double hi) -> double { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0. Rejection keeps it unbiased.
  auto below(std::uint64_t n) -> std::uint64_t
  {
    std::uint64_t const limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v = 0;
    do { v = engine_(); } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller (one value per call).
  auto normal() -> double
  {
    double u1 = 0.0;
    do { u1 = uniform(); } while (u1 <= 0.0);
    double const u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  auto engine() -> std::mt19937_64 & { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Derive an independent stream seed from a base seed and a stream tag.
inline auto mix_seed(std::uint64_t seed, std::uint64_t tag) -> std::uint64_t
{
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

} // namespace relaxmap
