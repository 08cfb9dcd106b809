#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "relaxmap/fourier.hpp"
#include "relaxmap/metrics.hpp"
#include "relaxmap/sampling.hpp"
#include "relaxmap/solvers.hpp"
#include "test_support.hpp"

using namespace relaxmap;
using relaxmap::testing::random_real;

TEST_SUITE("solvers") {

TEST_CASE("zero threshold returns the centre")
{
  Rng rng(1);
  WaveletFrame frame(8, 8, 2);
  QuadL1Problem p{random_real(8, 8, rng), 0.0, 50};
  CHECK(fista_l1(p, frame) == p.center);
}

TEST_CASE("threshold above the largest coefficient shrinks an orthonormal problem to zero")
{
  Rng rng(2);
  WaveletFrame frame(8, 8, 3, {2});
  auto const v = random_real(8, 8, rng);
  double top = 0.0;
  for (double c : frame.forward(v)) { top = std::max(top, std::abs(c)); }
  auto const x = fista_l1({v, top, 50}, frame);
  for (double e : x) { CHECK(std::abs(e) <= 1e-12); }
}

TEST_CASE("dual FISTA matches a primal-dual oracle")
{
  Rng rng(3);
  for (double tau : {0.02, 0.1, 0.4}) {
    WaveletFrame frame(8, 8, 2);
    auto const v = random_real(8, 8, rng);
    QuadL1Problem p{v, tau, 3000, 0.0};
    auto const x = fista_l1(p, frame);
    auto const oracle = relaxmap::testing::pd_quad_l1(v, tau, frame, 20000);
    double const gap = quad_l1_objective(x, p, frame) - quad_l1_objective(oracle, p, frame);
    CHECK(gap <= 1e-6);
    CHECK(quad_l1_objective(x, p, frame) <= quad_l1_objective(v, p, frame));
  }
}

TEST_CASE("warm-started dual continues the iteration")
{
  Rng rng(4);
  WaveletFrame frame(16, 16, 3);
  auto const v = random_real(16, 16, rng);
  QuadL1Problem p{v, 0.1, 5, 0.0};
  std::vector<double> dual;
  auto x = fista_l1(p, frame, &dual);
  double const first = quad_l1_objective(x, p, frame);
  for (int k = 0; k < 20; ++k) { x = fista_l1(p, frame, &dual); }
  CHECK(quad_l1_objective(x, p, frame) <= first);
  CHECK(dual.size() == static_cast<std::size_t>(frame.coefficient_count()));
}

TEST_CASE("power iteration")
{
  auto const id = [](ComplexImage const &u) { return u; };
  CHECK(power_iteration_norm(id, 4, 4) == doctest::Approx(1.0).epsilon(1e-12));

  auto const diag = [](ComplexImage const &u) {
    auto out = u;
    out[0] *= 3.0;
    return out;
  };
  CHECK(power_iteration_norm(diag, 1, 2, 200) == doctest::Approx(3.0).epsilon(1e-8));

  auto const zero = [](ComplexImage const &u) { return ComplexImage(u.rows(), u.cols()); };
  CHECK(power_iteration_norm(zero, 3, 3) == 0.0);

  SamplingOperator op(poisson_disk({32, 32, 0.3, 1.0, 2, 1}), ComplexImage(32, 32, 1.0));
  double const n = power_iteration_norm([&](ComplexImage const &u) { return op.normal(u); }, 32, 32);
  CHECK(n <= 1.0 + 1e-6);
  CHECK(n > 0.9);
}

TEST_CASE("bisection")
{
  auto const a = bisect_root({[](double d) { return d - 1.0; }, 0.0, 2.0, 1e-12});
  REQUIRE(a.has_value());
  CHECK(*a == doctest::Approx(1.0).epsilon(1e-11));
  auto const b = bisect_root({[](double d) { return std::exp(d) - 2.0; }, 0.0, 1.0, 1e-12});
  REQUIRE(b.has_value());
  CHECK(*b == doctest::Approx(std::log(2.0)).epsilon(1e-11));
  CHECK_FALSE(bisect_root({[](double d) { return d + 5.0; }, 0.0, 1.0}).has_value());
}

TEST_CASE("E objective pieces bracket the stationary points found on a dense grid")
{
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    double const x = rng.uniform(0.01, 2.0);
    double const w = rng.uniform(-3.0, 1.0);
    double const b = rng.uniform(-1.0, 1.0);
    double const rho = rng.uniform(0.1, 10.0);
    double const lam = rng.uniform(0.01, 10.0);
    double const lo = -8.0;
    double const hi = 2.0;
    auto const breaks = e_monotone_breaks(w, rho, lam, lo, hi);
    REQUIRE(breaks.front() == lo);
    REQUIRE(breaks.back() == hi);
    auto const grad = [&](double d) {
      double const h = 1e-6;
      return (e_objective(d + h, x, w, b, rho, lam) - e_objective(d - h, x, w, b, rho, lam)) / (2 * h);
    };
    // l'(d) e^{-d} is monotone on every piece, so its sign changes at most once there
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
      int changes = 0;
      double prev = grad(breaks[p] + 1e-5) * std::exp(-breaks[p]);
      for (int s = 1; s <= 400; ++s) {
        double const d = breaks[p] + (breaks[p + 1] - breaks[p]) * (s / 400.0) - (s == 400 ? 1e-5 : 0.0);
        double const g = grad(d) * std::exp(-d);
        if ((g > 1e-9 && prev < -1e-9) || (g < -1e-9 && prev > 1e-9)) { ++changes; }
        if (std::abs(g) > 1e-9) { prev = g; }
      }
      CHECK(changes <= 1);
    }
  }
}

TEST_CASE("E minimiser special cases")
{
  // lambda = 0, b = 0: rho/2 (x - e^d)^2 is minimised at log x
  auto const m = global_min_1d_e(0.7, 0.0, 0.0, 2.0, 0.0, -10.0, 3.0);
  CHECK(m.d == doctest::Approx(std::log(0.7)).epsilon(1e-9));
  CHECK(m.value == doctest::Approx(0.0).epsilon(1e-12));
  auto const clamped = global_min_1d_e(0.7, 0.0, 0.0, 2.0, 0.0, 0.0, 3.0);
  CHECK(clamped.d == 0.0);

  // rho = 0, b = 0: the nonnegative term vanishes at d = w
  auto const n = global_min_1d_e(0.5, -1.3, 0.0, 0.0, 4.0, -10.0, 3.0);
  CHECK(n.value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(e_objective(n.d, 0.5, -1.3, 0.0, 0.0, 4.0) <= 1e-15);
}

TEST_CASE("E minimiser beats a dense grid")
{
  Rng rng(6);
  double const lo = std::log(1e-3);
  double const hi = std::log(20.0);
  for (int k = 0; k < 100; ++k) {
    double const x = rng.uniform(0.01, 2.0);
    double const w = rng.uniform(-3.0, 1.0);
    double const b = rng.uniform(-1.0, 1.0);
    double const rho = rng.uniform(0.1, 10.0);
    double const lam = rng.uniform(0.01, 10.0);
    auto const m = global_min_1d_e(x, w, b, rho, lam, lo, hi);
    CHECK(m.d >= lo);
    CHECK(m.d <= hi);
    CHECK(m.value == doctest::Approx(e_objective(m.d, x, w, b, rho, lam)).epsilon(1e-12));
    double grid = std::numeric_limits<double>::infinity();
    for (double d = lo; d <= hi; d += 1e-3) { grid = std::min(grid, e_objective(d, x, w, b, rho, lam)); }
    CHECK(m.value <= grid + 1e-8);
  }
}

}
