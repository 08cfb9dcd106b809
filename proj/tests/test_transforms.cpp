#include <cmath>
#include <complex>
#include <vector>

#include <doctest.h>

#include "relaxmap/fourier.hpp"
#include "relaxmap/metrics.hpp"
#include "relaxmap/sampling.hpp"
#include "relaxmap/wavelet.hpp"
#include "test_support.hpp"

using namespace relaxmap;
using relaxmap::testing::random_complex;
using relaxmap::testing::random_real;

TEST_SUITE("transforms") {

TEST_CASE("unitary fft round trip")
{
  Rng rng(11);
  for (auto [r, c] : {std::pair<Index, Index>{8, 8}, {15, 12}, {64, 64}}) {
    auto const x = random_complex(r, c, rng);
    auto y = x;
    fft2(y);
    CHECK(norm2(y) == doctest::Approx(norm2(x)).epsilon(1e-12));
    ifft2(y);
    CHECK(image_linf_diff(x, y) <= 1e-10 * 8.0);
  }
}

TEST_CASE("fftshift is inverted by ifftshift on odd sizes")
{
  Rng rng(3);
  auto const x = random_complex(5, 7, rng);
  CHECK(image_linf_diff(ifftshift(fftshift(x)), x) == 0.0);
  ComplexImage d(5, 7);
  d(0, 0) = 1.0;
  CHECK(fftshift(d)(2, 3) == Complex(1.0, 0.0));
}

TEST_CASE("impulse has a flat spectrum")
{
  ComplexImage u(16, 16);
  u(3, 5) = 1.0;
  SamplingOperator op(SamplingPattern::full(16, 16), ComplexImage(16, 16, 1.0));
  for (auto v : op.forward(u)) { CHECK(std::abs(v) == doctest::Approx(1.0 / 16.0).epsilon(1e-12)); }
}

TEST_CASE("empty pattern gives zero measurements and a zero adjoint")
{
  Rng rng(5);
  SamplingOperator op(SamplingPattern::empty(12, 12), random_complex(12, 12, rng));
  for (auto v : op.forward(random_complex(12, 12, rng))) { CHECK(v == Complex{}); }
  for (auto v : op.adjoint(random_complex(12, 12, rng))) { CHECK(v == Complex{}); }
}

TEST_CASE("full pattern with a unit coil is an isometry")
{
  Rng rng(7);
  SamplingOperator op(SamplingPattern::full(16, 12), ComplexImage(16, 12, 1.0));
  auto const u = random_complex(16, 12, rng);
  CHECK(image_linf_diff(op.adjoint(op.forward(u)), u) <= 1e-10);
  CHECK(image_linf_diff(op.normal(u), u) <= 1e-10);
}

TEST_CASE("sampling operator adjoint identity")
{
  Rng rng(9);
  auto const pattern = poisson_disk({32, 32, 0.3, 1.0, 2, 4});
  SamplingOperator op(pattern, random_complex(32, 32, rng));
  for (int k = 0; k < 10; ++k) {
    auto const u = random_complex(32, 32, rng);
    auto const v = random_complex(32, 32, rng);
    auto const lhs = dot(v, op.forward(u));
    auto const rhs = dot(op.adjoint(v), u);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
    CHECK(image_linf_diff(op.normal(u), op.adjoint(op.forward(u))) <= 1e-12 * 32);
  }
}

TEST_CASE("daubechies filters are orthonormal with vanishing moments")
{
  for (int order = 1; order <= 8; ++order) {
    auto const h = daubechies_filter(order);
    REQUIRE(static_cast<int>(h.size()) == 2 * order);
    double sum = 0.0;
    for (double v : h) { sum += v; }
    CHECK(sum == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
    for (std::size_t shift = 0; shift < h.size(); shift += 2) {
      double s = 0.0;
      for (std::size_t k = 0; k + shift < h.size(); ++k) { s += h[k] * h[k + shift]; }
      CHECK(s == doctest::Approx(shift == 0 ? 1.0 : 0.0).epsilon(1e-13));
    }
    // high-pass g_k = (-1)^k h_{L-1-k} annihilates polynomials of degree < order
    for (int m = 0; m < order; ++m) {
      double s = 0.0;
      double scale = 0.0;
      for (std::size_t k = 0; k < h.size(); ++k) {
        double const g = ((k % 2 == 0) ? 1.0 : -1.0) * h[h.size() - 1 - k];
        s += g * std::pow(static_cast<double>(k), m);
        scale += std::abs(g) * std::pow(static_cast<double>(k), m);
      }
      CHECK(std::abs(s) <= 1e-10 * scale);
    }
  }
  CHECK_THROWS_AS(daubechies_filter(0), InvalidArgument);
  CHECK_THROWS_AS(daubechies_filter(9), InvalidArgument);
}

TEST_CASE("frame is tight and satisfies Parseval")
{
  Rng rng(13);
  for (auto [r, c] : {std::pair<Index, Index>{64, 64}, {20, 36}, {7, 9}}) {
    WaveletFrame frame(r, c, 3);
    auto const x = random_real(r, c, rng);
    auto const coeffs = frame.forward(x);
    double e = 0.0;
    for (double v : coeffs) { e += v * v; }
    CHECK(std::sqrt(e) == doctest::Approx(norm2(x)).epsilon(1e-12));
    CHECK(image_linf_diff(frame.adjoint(coeffs), x) <= 1e-10);
  }
}

TEST_CASE("frame adjoint matches forward")
{
  Rng rng(17);
  WaveletFrame frame(24, 40, 3);
  auto const x = random_real(24, 40, rng);
  std::vector<double> c(static_cast<std::size_t>(frame.coefficient_count()));
  for (auto &v : c) { v = rng.normal(); }
  auto const fx = frame.forward(x);
  double lhs = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) { lhs += fx[i] * c[i]; }
  CHECK(dot(x, frame.adjoint(c)) == doctest::Approx(lhs).epsilon(1e-11));
}

TEST_CASE("zero image has zero coefficients and zero coefficients give a zero image")
{
  WaveletFrame frame(16, 16, 2);
  for (double v : frame.forward(RealImage(16, 16))) { CHECK(v == 0.0); }
  std::vector<double> zeros(static_cast<std::size_t>(frame.coefficient_count()), 0.0);
  for (double v : frame.adjoint(zeros)) { CHECK(v == 0.0); }
}

TEST_CASE("single haar member is the orthonormal two-level transform")
{
  WaveletFrame frame(4, 4, 1, {1});
  CHECK(frame.scale() == 1.0);
  RealImage x(4, 4, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16});
  auto const c = frame.forward(x);
  // approximation of the top-left 2x2 block is (1 + 2 + 5 + 6) / 2
  CHECK(c[0] == doctest::Approx(7.0));
  CHECK(image_linf_diff(frame.adjoint(c), x) <= 1e-12);
}

TEST_CASE("piecewise-constant images are sparse in the haar member")
{
  Index const n = 64;
  WaveletFrame frame(n, n, 4, {1});
  RealImage x(n, n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < n; ++c) { x(r, c) = (r >= 16 && r < 48 && c >= 8 && c < 40) ? 1.0 : 0.0; }
  }
  auto const coeffs = frame.forward(x);
  Index nonzero = 0;
  for (double v : coeffs) { nonzero += std::abs(v) > 1e-9 ? 1 : 0; }
  CHECK(nonzero <= 4 * 32 * 4);
}

TEST_CASE("soft threshold")
{
  std::vector<double> c{3.0, -0.5, -4.0, 1.0};
  auto const s = soft_threshold(c, 1.0);
  CHECK(s[0] == 2.0);
  CHECK(s[1] == 0.0);
  CHECK(s[2] == -3.0);
  CHECK(s[3] == 0.0);
  CHECK(soft_threshold(c, 0.0) == c);
  CHECK(l1_norm(c) == 8.5);
  CHECK_THROWS_AS(soft_threshold(c, -1.0), InvalidArgument);
}

}
