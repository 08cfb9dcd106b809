#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "relaxmap/image.hpp"
#include "relaxmap/wavelet.hpp"

namespace relaxmap {

// min_x 1/2 ||x - center||^2 + tau ||Phi x||_1
struct QuadL1Problem {
  RealImage center;
  double tau = 0.0;
  int iters = 50;
  double tol = 1e-12; // stop when successive primal iterates differ by less than tol * ||center||
};

auto quad_l1_objective(RealImage const &x, QuadL1Problem const &p, WaveletFrame const &frame) -> double;

// Accelerated projected gradient on the dual,
//   min_{|z|_inf <= tau} 1/2 ||center - Phi* z||^2,  x = center - Phi* z,
// with step 1 (Phi Phi* has norm 1 for a tight frame) and momentum reset when
// the primal objective goes up. The best primal point seen is returned, so the
// result is never worse than `center`. From a zero dual the first step gives
// Phi*(soft(Phi center, tau)).
//
// `dual`, when given, warm-starts the iteration (if its length matches the
// frame) and receives the final dual point.
auto fista_l1(QuadL1Problem const &p, WaveletFrame const &frame, std::vector<double> *dual = nullptr) -> RealImage;

using LinearOp = std::function<ComplexImage(ComplexImage const &)>;

// Largest |eigenvalue| of a normal operator (e.g. A*A), by power iteration
// from a seeded random start. Returns 0 for the zero operator.
auto power_iteration_norm(LinearOp const &apply, Index rows, Index cols, int iters = 50, std::uint64_t seed = 7)
  -> double;

// A function known to be monotone on [lo, hi].
struct Monotone1D {
  std::function<double(double)> g;
  double lo = 0.0;
  double hi = 1.0;
  double tol = 1e-10;
};

// Root of g bracketed to width <= tol, or nullopt if g does not change sign.
auto bisect_root(Monotone1D const &m) -> std::optional<double>;

struct Min1D {
  double d = 0.0;
  double value = 0.0;
};

// l(d) = rho/2 (x - e^d)^2 + lambda e^{2d} (d - w)^2 + b (x - e^d)
auto e_objective(double d, double x, double w, double b, double rho, double lambda) -> double;

// Global minimiser of e_objective over [d_lo, d_hi]. l'(d) = e^d l1(d) and
// l1'(d) = e^d l2(d) with l2 quadratic, so the roots of l2 split the interval
// into pieces on which l1 is monotone; each piece holds at most one stationary
// point, found by bisection. The best of those, the two ends, log x and w
// (clamped) wins; ties keep the earliest in that order, log x first.
auto global_min_1d_e(double x, double w, double b, double rho, double lambda, double d_lo, double d_hi,
                     double tol = 1e-10) -> Min1D;

// Interval ends produced by the l2 roots (for inspection and tests); always
// starts with d_lo and ends with d_hi.
auto e_monotone_breaks(double w, double rho, double lambda, double d_lo, double d_hi) -> std::vector<double>;

} // namespace relaxmap
