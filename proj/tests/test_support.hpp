#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "relaxmap/image.hpp"
#include "relaxmap/phantom.hpp"
#include "relaxmap/rng.hpp"
#include "relaxmap/sampling.hpp"
#include "relaxmap/solvers.hpp"
#include "relaxmap/types.hpp"
#include "relaxmap/wavelet.hpp"

namespace relaxmap::testing {

inline auto random_real(Index rows, Index cols, Rng &rng, double lo = -1.0, double hi = 1.0) -> RealImage
{
  RealImage x(rows, cols);
  for (auto &v : x) { v = rng.uniform(lo, hi); }
  return x;
}

inline auto random_complex(Index rows, Index cols, Rng &rng) -> ComplexImage
{
  ComplexImage x(rows, cols);
  for (auto &v : x) { v = {rng.normal(), rng.normal()}; }
  return x;
}

// Small simulated acquisition used across suites.
struct Scene {
  Phantom phantom;
  CoilSet coils;
  KSpaceData data;
};

inline auto make_scene(Index n, double rate, double sigma, std::uint64_t seed = 1, Index echoes = 4, Index coils = 4,
                       PatternScheme scheme = PatternScheme::fixed) -> Scene
{
  auto const times = EchoTimes::uniform(echoes, 7.64, 5.41);
  Scene s;
  s.phantom = make_phantom(n, n, PhantomPreset::shepp_like, seed, times);
  s.coils = synth_coils(n, n, coils);
  EchoPatternSet patterns;
  if (rate >= 1.0) {
    patterns.scheme = scheme;
    patterns.patterns.assign(static_cast<std::size_t>(echoes), SamplingPattern::full(n, n));
  } else {
    PoissonDiskArgs args{n, n, rate, 1.0, default_calib_radius(n, n), seed};
    patterns = make_echo_patterns(echoes, scheme, args);
  }
  s.data = simulate_kspace(s.phantom, {times, s.coils, patterns, sigma}, seed);
  return s;
}

// Chambolle-Pock primal-dual iteration for
//   min_x 1/2 ||x - v||^2 + tau ||Phi x||_1,
// an algorithm independent of the dual FISTA used by the library.
inline auto pd_quad_l1(RealImage const &v, double tau, WaveletFrame const &frame, int iters) -> RealImage
{
  double const sigma = 0.99;
  double const t = 0.99;
  RealImage x = v;
  RealImage xbar = v;
  std::vector<double> y(static_cast<std::size_t>(frame.coefficient_count()), 0.0);
  for (int k = 0; k < iters; ++k) {
    auto const kx = frame.forward(xbar);
    for (std::size_t i = 0; i < y.size(); ++i) { y[i] = std::clamp(y[i] + sigma * kx[i], -tau, tau); }
    auto const kty = frame.adjoint(y);
    RealImage next(x.rows(), x.cols());
    for (Index p = 0; p < x.size(); ++p) { next[p] = (x[p] - t * kty[p] + t * v[p]) / (1.0 + t); }
    for (Index p = 0; p < x.size(); ++p) { xbar[p] = 2.0 * next[p] - x[p]; }
    x = std::move(next);
  }
  return x;
}

// Same scheme for
//   min_{h, r} sum_i w_i (h - t_i r - l_i)^2 + l2 ||Phi h||_1 + l3 ||Phi r||_1,  0 <= r <= r_max,
// given per-pixel moments S0 = sum w, S1 = sum w t, S2 = sum w t^2,
// T0 = sum w l, T1 = sum w t l. The prox of the quadratic plus box is a 2x2
// solve with r clamped.
struct FitMoments {
  RealImage s0, s1, s2, t0, t1;
};

inline auto fit_moments(RealEchoSet const &echoes) -> FitMoments
{
  auto const rows = echoes[0].rows();
  auto const cols = echoes[0].cols();
  FitMoments m{RealImage(rows, cols), RealImage(rows, cols), RealImage(rows, cols), RealImage(rows, cols),
               RealImage(rows, cols)};
  for (Index i = 0; i < echoes.size(); ++i) {
    double const t = echoes.times[i];
    for (Index p = 0; p < m.s0.size(); ++p) {
      double const f = echoes[i][p];
      double const w = f * f;
      double const l = std::log(f);
      m.s0[p] += w;
      m.s1[p] += w * t;
      m.s2[p] += w * t * t;
      m.t0[p] += w * l;
      m.t1[p] += w * t * l;
    }
  }
  return m;
}

inline auto pd_log_fit(FitMoments const &m, double l2, double l3, double r_max, WaveletFrame const &frame, int iters)
  -> std::pair<RealImage, RealImage>
{
  double const sigma = 0.99;
  double const t = 0.99;
  auto const rows = m.s0.rows();
  auto const cols = m.s0.cols();
  RealImage h(rows, cols);
  RealImage r(rows, cols);
  auto hbar = h;
  auto rbar = r;
  std::vector<double> yh(static_cast<std::size_t>(frame.coefficient_count()), 0.0);
  auto yr = yh;
  for (int k = 0; k < iters; ++k) {
    auto const kh = frame.forward(hbar);
    auto const kr = frame.forward(rbar);
    for (std::size_t i = 0; i < yh.size(); ++i) {
      yh[i] = std::clamp(yh[i] + sigma * kh[i], -l2, l2);
      yr[i] = std::clamp(yr[i] + sigma * kr[i], -l3, l3);
    }
    auto const ah = frame.adjoint(yh);
    auto const ar = frame.adjoint(yr);
    for (Index p = 0; p < h.size(); ++p) {
      double const a = h[p] - t * ah[p];
      double const b = r[p] - t * ar[p];
      double const m11 = 2.0 * m.s0[p] + 1.0 / t;
      double const m12 = -2.0 * m.s1[p];
      double const m22 = 2.0 * m.s2[p] + 1.0 / t;
      double const c1 = 2.0 * m.t0[p] + a / t;
      double const c2 = -2.0 * m.t1[p] + b / t;
      double const det = m11 * m22 - m12 * m12;
      double rn = (m11 * c2 - m12 * c1) / det;
      double hn = (m22 * c1 - m12 * c2) / det;
      if (rn < 0.0 || rn > r_max) {
        rn = std::clamp(rn, 0.0, r_max);
        hn = (c1 - m12 * rn) / m11;
      }
      hbar[p] = 2.0 * hn - h[p];
      rbar[p] = 2.0 * rn - r[p];
      h[p] = hn;
      r[p] = rn;
    }
  }
  return {h, r};
}

} // namespace relaxmap::testing
