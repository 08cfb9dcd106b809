#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "relaxmap/metrics.hpp"
#include "relaxmap/subproblems.hpp"
#include "test_support.hpp"

using namespace relaxmap;
using relaxmap::testing::make_scene;
using relaxmap::testing::random_real;

namespace {

auto state_like(Index n, EchoTimes const &times) -> AdmmState { return AdmmState::zeros(n, n, times, 1e-6); }

// Objective of the X step for one echo with theta fixed:
//   kappa/2 ||X||^2 - <X, Re(conj(Z) kq)> + <B, X> + rho/2 ||X - E||^2 + lambda1 ||Phi X||_1
auto xi_objective(RealImage const &x, RealImage const &theta, ComplexImage const &kq, RealImage const &b,
                  RealImage const &e, double kappa, double rho, double lambda1, WaveletFrame const &frame) -> double
{
  double s = lambda1 * l1_norm(frame.forward(x));
  for (Index p = 0; p < x.size(); ++p) {
    double const c = std::real(std::polar(1.0, -theta[p]) * kq[p]);
    double const d = x[p] - e[p];
    s += 0.5 * kappa * x[p] * x[p] - x[p] * c + b[p] * x[p] + 0.5 * rho * d * d;
  }
  return s;
}

// Primal-dual oracle for the X step with X >= 0.
auto xi_oracle(RealImage const &theta, ComplexImage const &kq, RealImage const &b, RealImage const &e, double kappa,
               double rho, double lambda1, WaveletFrame const &frame, int iters) -> RealImage
{
  double const t = 0.99;
  double const sigma = 0.99;
  double const a = kappa + rho;
  RealImage c(theta.rows(), theta.cols());
  for (Index p = 0; p < c.size(); ++p) {
    c[p] = std::real(std::polar(1.0, -theta[p]) * kq[p]) - b[p] + rho * e[p];
  }
  RealImage x(theta.rows(), theta.cols());
  auto xbar = x;
  std::vector<double> y(static_cast<std::size_t>(frame.coefficient_count()), 0.0);
  for (int k = 0; k < iters; ++k) {
    auto const kx = frame.forward(xbar);
    for (std::size_t i = 0; i < y.size(); ++i) { y[i] = std::clamp(y[i] + sigma * kx[i], -lambda1, lambda1); }
    auto const kty = frame.adjoint(y);
    for (Index p = 0; p < x.size(); ++p) {
      double const z = x[p] - t * kty[p];
      double const next = std::max((c[p] + z / t) / (a + 1.0 / t), 0.0);
      xbar[p] = 2.0 * next - x[p];
      x[p] = next;
    }
  }
  return x;
}

} // namespace

TEST_SUITE("subproblems") {

TEST_CASE("phase update is the angle of the weighted Q")
{
  RealImage old(1, 2);
  ComplexImage kq(1, 2);
  kq[0] = {1.0, 1.0};
  kq[1] = {2.5, 0.0};
  auto const th = update_theta(old, kq);
  CHECK(th[0] == doctest::Approx(std::numbers::pi / 4).epsilon(1e-15));
  CHECK(th[1] == 0.0);

  RealImage keep(1, 1, 1.25);
  CHECK(update_theta(keep, ComplexImage(1, 1))[0] == 1.25);
}

TEST_CASE("phase update beats a 4096-point grid")
{
  Rng rng(21);
  RealImage old(10, 20);
  ComplexImage kq(10, 20);
  for (auto &v : kq) { v = {rng.normal(), rng.normal()}; }
  auto const th = update_theta(old, kq);
  for (Index p = 0; p < kq.size(); ++p) {
    double const x = rng.uniform(0.1, 2.0);
    // theta part of sum_j kappa_ij/2 |Z X - Q_ij|^2 for fixed X
    auto const f = [&](double a) { return -x * std::real(std::polar(1.0, -a) * kq[p]); };
    double grid = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4096; ++k) { grid = std::min(grid, f(2.0 * std::numbers::pi * k / 4096.0)); }
    CHECK(f(th[p]) <= grid + 1e-8);
    CHECK(th[p] >= 0.0);
    CHECK(th[p] < 2.0 * std::numbers::pi);
  }
}

TEST_CASE("unregularised X step inverts fully sampled single-coil data")
{
  auto s = make_scene(16, 1.0, 0.0, 2, 2, 1);
  s.coils = CoilSet{{ComplexImage(16, 16, 1.0)}};
  s.data = simulate_kspace(s.phantom, {s.data.times, s.coils, s.data.patterns, 0.0}, 1);
  EchoSystem sys(s.data, s.coils);
  auto state = state_like(16, s.data.times);
  state.theta = s.phantom.theta;
  ReconParams p;
  p.prox_iters = 1;
  p.rho = 0.0;
  WaveletFrame frame(16, 16, 2);
  for (int k = 0; k < 60; ++k) { state.xi = update_xi(state, sys, p, frame); }
  auto const truth = decay_images(s.phantom, s.data.times);
  for (Index i = 0; i < 2; ++i) { CHECK(image_linf_diff(state.xi[i], truth[i]) <= 1e-8); }
}

TEST_CASE("large rho pulls X to E")
{
  auto const s = make_scene(16, 0.5, 0.01, 3, 2, 2);
  EchoSystem sys(s.data, s.coils);
  auto state = state_like(16, s.data.times);
  Rng rng(4);
  for (Index i = 0; i < 2; ++i) { state.e[i] = random_real(16, 16, rng, 0.1, 1.0); }
  ReconParams p;
  p.rho = 1e9;
  WaveletFrame frame(16, 16, 2);
  auto const xi = update_xi(state, sys, p, frame);
  for (Index i = 0; i < 2; ++i) { CHECK(image_linf_diff(xi[i], state.e[i]) <= 1e-6); }
}

TEST_CASE("X step matches a primal-dual oracle")
{
  auto const s = make_scene(16, 0.4, 0.01, 5, 2, 2);
  EchoSystem sys(s.data, s.coils);
  Rng rng(8);
  auto state = state_like(16, s.data.times);
  auto const truth = decay_images(s.phantom, s.data.times);
  ComplexEchoSet kq{{}, s.data.times};
  for (Index i = 0; i < 2; ++i) {
    state.theta[i] = random_real(16, 16, rng, 0.0, 6.0);
    state.b[i] = random_real(16, 16, rng, -0.05, 0.05);
    state.e[i] = truth[i];
    ComplexImage q(16, 16);
    for (Index p = 0; p < q.size(); ++p) {
      state.e[i][p] += 0.3 + 0.02 * rng.normal();
      q[p] = sys.kappa(i) * std::polar(truth[i][p] + 0.3 + 0.05 * rng.normal(), state.theta[i][p] + 0.1 * rng.normal());
    }
    kq.echoes.push_back(q);
  }
  ReconParams p;
  p.rho = 0.5;
  p.lambda1 = 0.02;
  p.prox_iters = 3000;
  WaveletFrame frame(16, 16, 3);
  auto const xi = update_xi(state, kq, sys, p, frame);
  for (Index i = 0; i < 2; ++i) {
    auto const oracle =
      xi_oracle(state.theta[i], kq[i], state.b[i], state.e[i], sys.kappa(i), p.rho, p.lambda1, frame, 20000);
    double const got =
      xi_objective(xi[i], state.theta[i], kq[i], state.b[i], state.e[i], sys.kappa(i), p.rho, p.lambda1, frame);
    double const best =
      xi_objective(oracle, state.theta[i], kq[i], state.b[i], state.e[i], sys.kappa(i), p.rho, p.lambda1, frame);
    CHECK(got - best <= 1e-5);
    for (double v : xi[i]) { CHECK(v >= 0.0); }
  }
}

TEST_CASE("exact two-point log fit")
{
  WaveletFrame frame(1, 1, 1);
  RealEchoSet x{{RealImage(1, 1, 2.0), RealImage(1, 1, 1.0)}, EchoTimes(std::vector<double>{1.0, 2.0})};
  auto const fit = weighted_log_fit(x, {}, frame);
  CHECK(fit.r2star[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(fit.h0[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  RealEchoSet flat{{RealImage(1, 1, 0.3), RealImage(1, 1, 0.3), RealImage(1, 1, 0.3)},
                   EchoTimes(std::vector<double>{1.0, 2.0, 4.0})};
  auto const f2 = weighted_log_fit(flat, {}, frame);
  CHECK(std::abs(f2.r2star[0]) <= 1e-12);
  CHECK(f2.h0[0] == doctest::Approx(std::log(0.3)).epsilon(1e-12));
}

TEST_CASE("log fit clamps R2* and zeroes pixels without signal")
{
  WaveletFrame frame(1, 3, 1);
  RealEchoSet x{{RealImage(1, 3, std::vector<double>{1.0, 1.0, 0.0}), RealImage(1, 3, std::vector<double>{2.0, 1e-3, 0.0})},
                EchoTimes(std::vector<double>{1.0, 2.0})};
  LogFitOptions o;
  o.r_max = 1.0;
  auto const fit = weighted_log_fit(x, o, frame);
  CHECK(fit.r2star[0] == 0.0);
  CHECK(fit.r2star[1] == 1.0);
  CHECK(fit.r2star[2] == 0.0);
  CHECK(fit.h0[2] == 0.0);
  auto const closed = log_linear_fit(x, o.e_min, o.r_max);
  CHECK(closed.r2star == fit.r2star);
}

TEST_CASE("regularised log fit matches a long-run oracle from random restarts")
{
  auto const times = EchoTimes::uniform(4, 7.64, 5.41);
  auto const ph = make_phantom(16, 16, PhantomPreset::random_smooth, 4, times);
  auto x = decay_images(ph, times);
  Rng rng(31);
  for (Index i = 0; i < 4; ++i) {
    for (auto &v : x[i]) { v = (v + 0.05) * (1.0 + 0.05 * rng.normal()); }
  }
  WaveletFrame frame(16, 16, 3);
  auto const m = relaxmap::testing::fit_moments(x);
  for (auto [l2, l3] : {std::pair{0.0, 0.05}, {0.01, 0.0}, {0.01, 0.05}}) {
    LogFitOptions o;
    o.lambda2 = l2;
    o.lambda3 = l3;
    o.iters = 10000;
    o.tol = 0.0;
    auto const [h, r] = relaxmap::testing::pd_log_fit(m, l2, l3, o.r_max, frame, 30000);
    double const best = fit_objective(x, h, r, l2, l3, o.e_min, frame);
    for (int start = 0; start < 2; ++start) {
      LogFitWarm warm{random_real(16, 16, rng, -3.0, 1.0), random_real(16, 16, rng, 0.0, 0.2), {}, {}};
      auto const fit = start == 0 ? weighted_log_fit(x, o, frame) : weighted_log_fit(x, o, frame, &warm);
      double const got = fit_objective(x, fit.h0, fit.r2star, l2, l3, o.e_min, frame);
      CHECK(got - best <= 1e-5);
      CHECK(best - got <= 1e-5);
      for (double v : fit.r2star) {
        CHECK(v >= 0.0);
        CHECK(v <= o.r_max);
      }
    }
  }
}

TEST_CASE("E step special cases")
{
  auto const times = EchoTimes::uniform(2, 7.64, 5.41);
  Rng rng(41);
  auto state = state_like(6, times);
  for (Index i = 0; i < 2; ++i) { state.xi[i] = random_real(6, 6, rng, 0.0, 3.0); }
  state.xi[0][0] = 0.0;
  state.h0 = random_real(6, 6, rng, -1.0, 0.5);
  state.r2star = random_real(6, 6, rng, 0.0, 0.05);

  ReconParams p;
  p.rho = 1.0;
  p.lambda = 0.0;
  double const e_max = 2.0;
  auto const e = update_e(state, p, e_max);
  for (Index i = 0; i < 2; ++i) {
    for (Index q = 0; q < 36; ++q) {
      CHECK(e[i][q] == doctest::Approx(std::clamp(state.xi[i][q], p.e_min, e_max)).epsilon(1e-8));
    }
  }

  p.rho = 0.0;
  p.lambda = 1.0;
  auto const e2 = update_e(state, p, 10.0);
  for (Index i = 0; i < 2; ++i) {
    for (Index q = 0; q < 36; ++q) {
      CHECK(e2[i][q] == doctest::Approx(std::exp(state.h0[q] - times[i] * state.r2star[q])).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(update_e(state, p, p.e_min), InvalidArgument);
}

TEST_CASE("E step dominates its candidates")
{
  auto const times = EchoTimes::uniform(3, 7.64, 5.41);
  Rng rng(42);
  auto state = state_like(8, times);
  for (Index i = 0; i < 3; ++i) {
    state.xi[i] = random_real(8, 8, rng, 0.01, 2.0);
    state.b[i] = random_real(8, 8, rng, -1.0, 1.0);
  }
  state.h0 = random_real(8, 8, rng, -2.0, 0.5);
  state.r2star = random_real(8, 8, rng, 0.0, 0.05);
  ReconParams p;
  p.rho = 0.7;
  p.lambda = 3.0;
  double const e_max = 20.0;
  auto const e = update_e(state, p, e_max);
  for (Index i = 0; i < 3; ++i) {
    for (Index q = 0; q < 64; ++q) {
      double const x = state.xi[i][q];
      double const w = state.h0[q] - times[i] * state.r2star[q];
      double const b = state.b[i][q];
      auto const l = [&](double d) { return e_objective(d, x, w, b, p.rho, p.lambda); };
      double const at = l(std::log(e[i][q]));
      CHECK(at <= l(std::log(x)) + 1e-12);
      CHECK(at <= l(w) + 1e-12);
      CHECK(e[i][q] >= p.e_min);
      CHECK(e[i][q] <= e_max);
    }
  }
}

TEST_CASE("dual step")
{
  auto const times = EchoTimes::uniform(1, 1.0, 1.0);
  auto state = state_like(2, times);
  state.xi[0] = RealImage(2, 2, 1.5);
  state.e[0] = RealImage(2, 2, 0.5);
  ReconParams p;
  p.rho = 2.0;
  CHECK(update_dual(state, p)[0] == RealImage(2, 2, 2.0));
  p.rho = 0.0;
  CHECK(update_dual(state, p)[0] == state.b[0]);
  p.rho = 2.0;
  state.e[0] = state.xi[0];
  state.b[0] = RealImage(2, 2, 0.25);
  CHECK(update_dual(state, p)[0] == state.b[0]);
  CHECK(primal_residual(state) == 0.0);
}

TEST_CASE("weighted log loss approximates the nonlinear loss for small perturbations")
{
  auto const times = EchoTimes::uniform(4, 7.64, 5.41);
  Rng rng(51);
  double prev = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> shapes;
  for (int k = 0; k < 200; ++k) {
    std::vector<double> u(4);
    for (auto &v : u) { v = rng.uniform(-1.0, 1.0); }
    u[static_cast<std::size_t>(k % 4)] = (k % 2 == 0) ? 1.0 : -1.0;
    shapes.push_back(u);
  }
  for (double amp : {0.05, 0.02, 0.01}) {
    double worst = 0.0;
    for (auto const &u : shapes) {
      double const h0 = std::log(0.8);
      double const r = 0.03;
      std::vector<double> x(4);
      for (Index i = 0; i < 4; ++i) {
        x[static_cast<std::size_t>(i)] = std::exp(h0 - times[i] * r) * (1.0 + amp * u[static_cast<std::size_t>(i)]);
      }
      double const a = log_domain_loss(x, times, h0, r);
      double const b = nonlinear_loss(x, times, h0, r);
      worst = std::max(worst, std::abs(a - b) / b);
    }
    if (amp <= 0.02) { CHECK(worst <= 0.05); }
    CHECK(worst < prev);
    prev = worst;
  }
}

}
