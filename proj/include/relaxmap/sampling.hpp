#pragma once

#include <cstdint>
#include <vector>

#include "relaxmap/image.hpp"

namespace relaxmap {

// Binary inclusion mask over the phase-encode plane, stored in centred
// k-space layout (DC at (rows/2, cols/2)).
struct SamplingPattern {
  Index rows = 0;
  Index cols = 0;
  std::vector<std::uint8_t> mask;
  double d_min = 0.0;
  double target_rate = 1.0;
  int calib_radius = 0;
  std::uint64_t seed = 0;

  auto operator()(Index r, Index c) const -> bool { return mask[static_cast<std::size_t>(r * cols + c)] != 0; }
  [[nodiscard]] auto count() const -> Index;
  [[nodiscard]] auto rate() const -> double;
  [[nodiscard]] auto in_calibration(Index r, Index c) const -> bool;
  [[nodiscard]] auto as_image() const -> RealImage;

  static auto full(Index rows, Index cols) -> SamplingPattern;
  static auto empty(Index rows, Index cols) -> SamplingPattern;

  auto operator==(SamplingPattern const &) const -> bool = default;
};

enum class PatternScheme { fixed, complementary };

struct EchoPatternSet {
  std::vector<SamplingPattern> patterns;
  PatternScheme scheme = PatternScheme::fixed;

  [[nodiscard]] auto size() const -> Index { return static_cast<Index>(patterns.size()); }
  auto operator[](Index i) const -> SamplingPattern const & { return patterns[static_cast<std::size_t>(i)]; }
  // Number of locations sampled by at least one echo.
  [[nodiscard]] auto union_count() const -> Index;
};

struct PoissonDiskArgs {
  Index rows = 0;
  Index cols = 0;
  double target_rate = 0.3;
  double d_min = 2.0;
  int calib_radius = 0;
  std::uint64_t seed = 0;
};

// Upper bound on the density of an integer point set with pairwise distance
// >= d_min (square-cell packing argument). Exact for d_min <= 2.
auto packing_density_bound(double d_min) -> double;

// Poisson-disk mask: calibration square fully sampled, every other pair of
// samples at Euclidean distance >= d_min, achieved rate within 10% of target.
// Throws InfeasiblePattern carrying the best achievable rate otherwise.
auto poisson_disk(PoissonDiskArgs const &args) -> SamplingPattern;

// Largest distance in {d_min, sqrt(2), 1} (descending, only values <= d_min)
// that poisson_disk can realise at this rate. Used by the experiment runner
// when the configured d_min cannot reach the requested rate.
auto feasible_d_min(PoissonDiskArgs const &args) -> double;

// Probability of re-drawing a candidate that an earlier echo already sampled
// in the complementary scheme.
inline constexpr double kComplementaryRedraw = 0.9;

auto make_echo_patterns(Index echoes, PatternScheme scheme, PoissonDiskArgs const &args) -> EchoPatternSet;

auto default_calib_radius(Index rows, Index cols) -> int;

} // namespace relaxmap
