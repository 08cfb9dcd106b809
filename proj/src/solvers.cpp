#include "relaxmap/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relaxmap/error.hpp"
#include "relaxmap/rng.hpp"

namespace relaxmap {

auto quad_l1_objective(RealImage const &x, QuadL1Problem const &p, WaveletFrame const &frame) -> double
{
  require_same_shape(x, p.center, "quad_l1_objective");
  double q = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    double const d = x[i] - p.center[i];
    q += d * d;
  }
  return 0.5 * q + p.tau * l1_norm(frame.forward(x));
}

auto fista_l1(QuadL1Problem const &p, WaveletFrame const &frame, std::vector<double> *dual) -> RealImage
{
  if (!(p.tau >= 0.0)) { throw InvalidArgument("fista_l1 requires tau >= 0"); }
  if (p.iters < 0) { throw InvalidArgument("fista_l1 requires a nonnegative iteration count"); }
  auto const n = static_cast<std::size_t>(frame.coefficient_count());
  if (p.tau == 0.0) {
    if (dual) { dual->assign(n, 0.0); }
    return p.center;
  }

  std::vector<double> z(n, 0.0);
  bool warm = false;
  if (dual && dual->size() == n) {
    z = *dual;
    for (auto &v : z) { v = std::clamp(v, -p.tau, p.tau); }
    warm = std::any_of(z.begin(), z.end(), [](double v) { return v != 0.0; });
  }

  RealImage best = p.center;
  double best_obj = std::numeric_limits<double>::infinity();
  if (warm) { best_obj = p.tau * l1_norm(frame.forward(p.center)); }

  double const scale = std::max(norm2(p.center), std::numeric_limits<double>::min());
  std::vector<double> w = z;
  std::vector<double> z_next(n);
  RealImage x_last;
  double t = 1.0;
  double prev_obj = std::numeric_limits<double>::infinity();
  for (int k = 0;; ++k) {
    auto x = frame.adjoint(w);
    for (Index i = 0; i < x.size(); ++i) { x[i] = p.center[i] - x[i]; }
    auto const c = frame.forward(x);
    double q = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
      double const d = x[i] - p.center[i];
      q += d * d;
    }
    double const obj = 0.5 * q + p.tau * l1_norm(c);
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
    if (k == p.iters) { break; }
    if (k > 0) {
      double diff = 0.0;
      for (Index i = 0; i < x.size(); ++i) { diff += (x[i] - x_last[i]) * (x[i] - x_last[i]); }
      if (std::sqrt(diff) <= p.tol * scale) { break; }
    }
    if (obj > prev_obj) { t = 1.0; }
    prev_obj = obj;
    x_last = std::move(x);

    for (std::size_t i = 0; i < n; ++i) { z_next[i] = std::clamp(w[i] + c[i], -p.tau, p.tau); }
    double const t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    double const beta = (t - 1.0) / t_next;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = z_next[i] + beta * (z_next[i] - z[i]);
      z[i] = z_next[i];
    }
    t = t_next;
  }
  if (dual) { *dual = std::move(z); }
  return best;
}

auto power_iteration_norm(LinearOp const &apply, Index rows, Index cols, int iters, std::uint64_t seed) -> double
{
  if (iters < 1) { throw InvalidArgument("power iteration needs at least one iteration"); }
  Rng rng(seed);
  ComplexImage x(rows, cols);
  for (auto &v : x) { v = Complex(rng.normal(), rng.normal()); }
  double nx = norm2(x);
  for (auto &v : x) { v /= nx; }
  double estimate = 0.0;
  for (int k = 0; k < iters; ++k) {
    auto y = apply(x);
    require_same_shape(y, x, "power_iteration_norm");
    estimate = norm2(y);
    if (estimate == 0.0) { return 0.0; }
    for (auto &v : y) { v /= estimate; }
    x = std::move(y);
  }
  return estimate;
}

auto bisect_root(Monotone1D const &m) -> std::optional<double>
{
  if (!(m.lo <= m.hi)) { throw InvalidArgument("bisect_root requires lo <= hi"); }
  if (!(m.tol > 0.0)) { throw InvalidArgument("bisect_root requires tol > 0"); }
  double lo = m.lo;
  double hi = m.hi;
  double glo = m.g(lo);
  double const ghi = m.g(hi);
  if (glo == 0.0) { return lo; }
  if (ghi == 0.0) { return hi; }
  if ((glo < 0.0) == (ghi < 0.0)) { return std::nullopt; }
  while (hi - lo > m.tol) {
    double const mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) { break; }
    double const gm = m.g(mid);
    if (gm == 0.0) { return mid; }
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

auto e_objective(double d, double x, double w, double b, double rho, double lambda) -> double
{
  double const e = std::exp(d);
  double const r = x - e;
  double const u = d - w;
  return 0.5 * rho * r * r + lambda * e * e * u * u + b * r;
}

auto e_monotone_breaks(double w, double rho, double lambda, double d_lo, double d_hi) -> std::vector<double>
{
  std::vector<double> breaks{d_lo};
  // l2(d) = 2 lambda u^2 + 6 lambda u + 2 lambda + rho, u = d - w
  if (lambda > 0.0) {
    double const disc = 36.0 * lambda * lambda - 8.0 * lambda * (2.0 * lambda + rho);
    if (disc > 0.0) {
      double const s = std::sqrt(disc);
      double const u1 = (-6.0 * lambda - s) / (4.0 * lambda);
      double const u2 = (-6.0 * lambda + s) / (4.0 * lambda);
      if (u2 - u1 >= 1e-12) {
        for (double u : {u1, u2}) {
          double const d = w + u;
          if (d > breaks.back() && d < d_hi) { breaks.push_back(d); }
        }
      }
    }
  }
  breaks.push_back(d_hi);
  return breaks;
}

auto global_min_1d_e(double x, double w, double b, double rho, double lambda, double d_lo, double d_hi, double tol)
  -> Min1D
{
  if (!(std::isfinite(d_lo) && std::isfinite(d_hi) && d_lo < d_hi)) {
    throw InvalidArgument("global_min_1d_e requires finite d_lo < d_hi");
  }
  if (!(rho >= 0.0 && lambda >= 0.0)) { throw InvalidArgument("global_min_1d_e requires rho, lambda >= 0"); }

  auto const l1 = [&](double d) {
    double const e = std::exp(d);
    double const u = d - w;
    return rho * (e - x) + 2.0 * lambda * e * u + 2.0 * lambda * e * u * u - b;
  };

  // log x and w go first so that flat objectives (rho = lambda = b = 0) keep
  // E at X rather than at a bound
  double const d_x = x > 0.0 ? std::clamp(std::log(x), d_lo, d_hi) : d_lo;
  Min1D best{d_x, e_objective(d_x, x, w, b, rho, lambda)};
  auto consider = [&](double d) {
    double const v = e_objective(d, x, w, b, rho, lambda);
    if (v < best.value) { best = {d, v}; }
  };
  consider(std::clamp(w, d_lo, d_hi));
  consider(d_lo);
  consider(d_hi);
  auto const breaks = e_monotone_breaks(w, rho, lambda, d_lo, d_hi);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (auto root = bisect_root({l1, breaks[k], breaks[k + 1], tol})) { consider(*root); }
  }
  return best;
}

} // namespace relaxmap
