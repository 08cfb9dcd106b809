#include <cmath>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

#include "relaxmap/sampling.hpp"

using namespace relaxmap;

namespace {

// Smallest pairwise distance among samples outside the calibration square,
// by checking every pair.
auto min_pair_distance(SamplingPattern const &p) -> double
{
  std::vector<std::pair<double, double>> pts;
  for (Index r = 0; r < p.rows; ++r) {
    for (Index c = 0; c < p.cols; ++c) {
      if (p(r, c) && !p.in_calibration(r, c)) { pts.emplace_back(r, c); }
    }
  }
  double best = 1e300;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double const dr = pts[i].first - pts[j].first;
      double const dc = pts[i].second - pts[j].second;
      best = std::min(best, dr * dr + dc * dc);
    }
  }
  return std::sqrt(best);
}

} // namespace

TEST_SUITE("sampling") {

TEST_CASE("minimum distance holds for every pair")
{
  for (auto [rate, d] : {std::pair{0.1, 2.0}, {0.2, 2.0}, {0.18, 1.5}, {0.45, 1.0}}) {
    auto const p = poisson_disk({96, 96, rate, d, 4, 21});
    CHECK(min_pair_distance(p) >= d - 1e-12);
    CHECK(std::abs(p.rate() - rate) <= 0.1 * rate);
  }
}

TEST_CASE("calibration square is fully sampled")
{
  auto const p = poisson_disk({64, 64, 0.1, 2.0, 5, 3});
  for (Index r = 27; r <= 37; ++r) {
    for (Index c = 27; c <= 37; ++c) { CHECK(p(r, c)); }
  }
  CHECK(p.in_calibration(32, 32));
  CHECK_FALSE(p.in_calibration(32, 38));
}

TEST_CASE("patterns are deterministic per seed")
{
  PoissonDiskArgs a{64, 48, 0.2, 2.0, 3, 99};
  CHECK(poisson_disk(a) == poisson_disk(a));
  auto b = a;
  b.seed = 100;
  CHECK(poisson_disk(a).mask != poisson_disk(b).mask);
}

TEST_CASE("full rate without a distance gives the full mask")
{
  auto const p = poisson_disk({20, 30, 1.0, 0.0, 0, 1});
  CHECK(p.count() == 600);
}

TEST_CASE("zero distance gives uniformly spread samples")
{
  // counts in 8x8 blocks of a 64x64 grid, chi-square against the uniform law
  auto const p = poisson_disk({64, 64, 0.3, 0.0, 0, 12345});
  CHECK(std::abs(p.rate() - 0.3) <= 0.03);
  std::vector<double> counts(64, 0.0);
  for (Index r = 0; r < 64; ++r) {
    for (Index c = 0; c < 64; ++c) {
      if (p(r, c)) { counts[static_cast<std::size_t>((r / 8) * 8 + c / 8)] += 1.0; }
    }
  }
  double const expected = static_cast<double>(p.count()) / 64.0;
  double chi2 = 0.0;
  for (double n : counts) { chi2 += (n - expected) * (n - expected) / expected; }
  boost::math::chi_squared dist(63.0);
  double const p_value = 1.0 - boost::math::cdf(dist, chi2);
  CHECK(p_value > 0.01);
}

TEST_CASE("unreachable rates report the achievable rate")
{
  PoissonDiskArgs a{320, 320, 0.3, 2.0, 0, 1};
  try {
    (void)poisson_disk(a);
    FAIL("expected InfeasiblePattern");
  } catch (InfeasiblePattern const &e) {
    CHECK(e.achievable_rate > 0.0);
    CHECK(e.achievable_rate <= packing_density_bound(2.0) + 640.0 / (320.0 * 320.0) + 1e-12);
  }
  CHECK(packing_density_bound(2.0) == doctest::Approx(0.25));
  CHECK(packing_density_bound(1.0) == 1.0);
  CHECK(packing_density_bound(std::sqrt(2.0)) == doctest::Approx(0.5));
  CHECK(feasible_d_min(a) == std::sqrt(2.0));
  a.target_rate = 0.2;
  CHECK(feasible_d_min(a) == 2.0);
}

TEST_CASE("invalid generator arguments")
{
  CHECK_THROWS_AS(poisson_disk({0, 10, 0.3, 1.0, 0, 1}), InvalidArgument);
  CHECK_THROWS_AS(poisson_disk({10, 10, 0.0, 1.0, 0, 1}), InvalidArgument);
  CHECK_THROWS_AS(poisson_disk({10, 10, 1.5, 1.0, 0, 1}), InvalidArgument);
  CHECK_THROWS_AS(poisson_disk({10, 10, 0.3, -1.0, 0, 1}), InvalidArgument);
}

TEST_CASE("single echo makes both schemes identical")
{
  PoissonDiskArgs a{48, 48, 0.2, 1.5, 3, 8};
  auto const f = make_echo_patterns(1, PatternScheme::fixed, a);
  auto const c = make_echo_patterns(1, PatternScheme::complementary, a);
  CHECK(f[0] == c[0]);
}

TEST_CASE("fixed scheme repeats one mask")
{
  auto const s = make_echo_patterns(6, PatternScheme::fixed, {48, 48, 0.2, 1.5, 3, 8});
  REQUIRE(s.size() == 6);
  for (Index i = 1; i < 6; ++i) { CHECK(s[i].mask == s[0].mask); }
  CHECK(s.union_count() == s[0].count());
}

TEST_CASE("complementary scheme spreads coverage")
{
  PoissonDiskArgs a{64, 64, 0.1, 2.0, 3, 8};
  auto const s = make_echo_patterns(4, PatternScheme::complementary, a);
  double const grid = 64.0 * 64.0;
  CHECK(static_cast<double>(s.union_count()) / grid > 0.1);
  CHECK(static_cast<double>(s.union_count()) / grid <= 0.4);
  CHECK(s.union_count() > s[0].count());
  for (Index i = 0; i < 4; ++i) {
    CHECK(min_pair_distance(s[i]) >= 2.0 - 1e-12);
    CHECK(std::abs(s[i].rate() - 0.1) <= 0.01);
  }
}

}
