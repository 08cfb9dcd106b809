#include "relaxmap/subproblems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "relaxmap/error.hpp"
#include "relaxmap/solvers.hpp"

namespace relaxmap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLipschitzMargin = 1.05;

auto filled(Index rows, Index cols, EchoTimes const &times, double value) -> RealEchoSet
{
  RealEchoSet set{{}, times};
  for (Index i = 0; i < times.size(); ++i) {
    RealImage img(rows, cols);
    std::fill(img.begin(), img.end(), value);
    set.echoes.push_back(std::move(img));
  }
  return set;
}

// One X_i step for a single echo. b and e may be null (no coupling).
auto xi_step(RealImage const &theta, ComplexImage const &kq, RealImage const *b, RealImage const *e, double rho,
             double kappa, double lambda1, int prox_iters, WaveletFrame const &frame, std::vector<double> *dual)
  -> RealImage
{
  double const denom = rho + kappa;
  QuadL1Problem prob{RealImage(theta.rows(), theta.cols()), lambda1 / denom, prox_iters};
  for (Index p = 0; p < theta.size(); ++p) {
    double num = (std::polar(1.0, -theta[p]) * kq[p]).real();
    if (b) { num -= (*b)[p]; }
    if (e) { num += rho * (*e)[p]; }
    prob.center[p] = num / denom;
  }
  auto x = fista_l1(prob, frame, dual);
  for (auto &v : x) { v = std::max(v, 0.0); }
  return x;
}

// Primal step of the regularised fit; the dual step is 0.99 / this.
constexpr double kFitPrimalStep = 1.0;

struct FitSums {
  std::vector<double> s0, s1, s2, t0, t1;
};

auto fit_sums(RealEchoSet const &echoes, double e_min) -> FitSums
{
  auto const n = static_cast<std::size_t>(echoes[0].size());
  FitSums s{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
            std::vector<double>(n)};
  for (Index i = 0; i < echoes.size(); ++i) {
    double const t = echoes.times[i];
    auto const &f = echoes[i];
    for (std::size_t p = 0; p < n; ++p) {
      double const v = f[static_cast<Index>(p)];
      if (!(v > e_min)) { continue; }
      double const w = v * v;
      double const l = std::log(v);
      s.s0[p] += w;
      s.s1[p] += w * t;
      s.s2[p] += w * t * t;
      s.t0[p] += w * l;
      s.t1[p] += w * t * l;
    }
  }
  return s;
}

// Best h for fixed r, per pixel.
auto best_h(FitSums const &s, std::size_t p, double r) -> double { return (s.t0[p] + s.s1[p] * r) / s.s0[p]; }

void closed_form(FitSums const &s, double r_max, RealImage &h, RealImage &r)
{
  for (std::size_t p = 0; p < s.s0.size(); ++p) {
    auto const ip = static_cast<Index>(p);
    if (!(s.s0[p] > 0.0)) {
      h[ip] = 0.0;
      r[ip] = 0.0;
      continue;
    }
    double const det = s.s0[p] * s.s2[p] - s.s1[p] * s.s1[p];
    double rv = 0.0;
    // det is ~0 when only one echo carries weight; the rate is then unidentified
    if (det > 1e-12 * s.s0[p] * s.s2[p]) { rv = (s.s1[p] * s.t0[p] - s.s0[p] * s.t1[p]) / det; }
    rv = std::clamp(rv, 0.0, r_max);
    r[ip] = rv;
    h[ip] = best_h(s, p, rv);
  }
}

// Primal-dual (Chambolle-Pock) iteration for the regularised fit. The
// weighted quadratic with the box on R2* is proxed exactly per pixel (a 2x2
// solve, R2* clamped, H0 re-solved), the l1 terms through their duals, which
// live in [-lambda, lambda]. Pixels without signal are held at 0.
auto regularised_fit(FitSums const &s, LogFitOptions const &opt, WaveletFrame const &frame, RealImage &h, RealImage &r,
                     std::vector<double> &h_dual, std::vector<double> &r_dual) -> std::pair<int, bool>
{
  auto const n = s.s0.size();
  auto const m = static_cast<std::size_t>(frame.coefficient_count());
  bool const reg_h = opt.lambda2 > 0.0;
  bool const reg_r = opt.lambda3 > 0.0;
  // tau * sigma * ||Phi||^2 < 1 with ||Phi|| = 1
  double const tau = kFitPrimalStep;
  double const sigma = 0.99 / kFitPrimalStep;

  auto reset = [&](std::vector<double> &dual, bool active, double bound) {
    if (!active) {
      dual.clear();
      return;
    }
    if (dual.size() != m) { dual.assign(m, 0.0); }
    for (auto &v : dual) { v = std::clamp(v, -bound, bound); }
  };
  reset(h_dual, reg_h, opt.lambda2);
  reset(r_dual, reg_r, opt.lambda3);

  Index const rows = h.rows();
  Index const cols = h.cols();
  RealImage hbar = h;
  RealImage rbar = r;
  RealImage ah(rows, cols);
  RealImage ar(rows, cols);
  double const tiny = std::numeric_limits<double>::min();
  int it = 0;
  bool converged = false;
  while (it < opt.iters) {
    ++it;
    if (reg_h) {
      auto const k = frame.forward(hbar);
      for (std::size_t i = 0; i < m; ++i) { h_dual[i] = std::clamp(h_dual[i] + sigma * k[i], -opt.lambda2, opt.lambda2); }
      ah = frame.adjoint(h_dual);
    }
    if (reg_r) {
      auto const k = frame.forward(rbar);
      for (std::size_t i = 0; i < m; ++i) { r_dual[i] = std::clamp(r_dual[i] + sigma * k[i], -opt.lambda3, opt.lambda3); }
      ar = frame.adjoint(r_dual);
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      auto const ip = static_cast<Index>(p);
      double hn = 0.0;
      double rn = 0.0;
      if (s.s0[p] > 0.0) {
        double const a = h[ip] - tau * ah[ip];
        double const b = r[ip] - tau * ar[ip];
        double const m11 = 2.0 * s.s0[p] + 1.0 / tau;
        double const m12 = -2.0 * s.s1[p];
        double const m22 = 2.0 * s.s2[p] + 1.0 / tau;
        double const c1 = 2.0 * s.t0[p] + a / tau;
        double const c2 = -2.0 * s.t1[p] + b / tau;
        rn = (m11 * c2 - m12 * c1) / (m11 * m22 - m12 * m12);
        if (rn < 0.0 || rn > opt.r_max) { rn = std::clamp(rn, 0.0, opt.r_max); }
        hn = (c1 - m12 * rn) / m11;
      }
      double const dh = hn - h[ip];
      double const dr = rn - r[ip];
      num += dh * dh + dr * dr;
      den += hn * hn + rn * rn;
      hbar[ip] = hn + dh;
      rbar[ip] = rn + dr;
      h[ip] = hn;
      r[ip] = rn;
    }
    if (std::sqrt(num) <= opt.tol * std::max(std::sqrt(den), tiny)) {
      converged = true;
      break;
    }
  }
  return {it, converged};
}

} // namespace

EchoSystem::EchoSystem(KSpaceData const &data, CoilSet const &coils, int power_iters)
  : echoes_{data.echoes}, coils_{data.coils}, rows_{0}, cols_{0}, times_{data.times}
{
  data.validate();
  coils.validate();
  if (coils.size() != data.coils) { throw DimensionError("coil map count does not match the k-space coil count"); }
  rows_ = data.rows();
  cols_ = data.cols();
  if (coils.rows() != rows_ || coils.cols() != cols_) { throw DimensionError("coil maps and k-space dimensions differ"); }

  for (Index i = 0; i < echoes_; ++i) {
    ComplexImage aty(rows_, cols_);
    for (Index j = 0; j < coils_; ++j) {
      ops_.emplace_back(data.patterns[i], coils[j]);
      data_.push_back(data.at(i, j));
      auto const back = ops_.back().adjoint(data.at(i, j));
      for (Index p = 0; p < aty.size(); ++p) { aty[p] += back[p]; }
    }
    aty_.push_back(std::move(aty));
  }
  for (Index i = 0; i < echoes_; ++i) {
    double l = -1.0;
    for (Index k = 0; k < i; ++k) {
      if (data.patterns[k] == data.patterns[i]) {
        l = lmax_[static_cast<std::size_t>(k)];
        break;
      }
    }
    if (l < 0.0) {
      l = power_iteration_norm([this, i](ComplexImage const &u) { return normal(i, u); }, rows_, cols_, power_iters);
    }
    lmax_.push_back(l);
    kappa_.push_back(2.0 * kLipschitzMargin * l);
  }
}

auto EchoSystem::normal(Index echo, ComplexImage const &u) const -> ComplexImage
{
  ComplexImage out(rows_, cols_);
  for (Index j = 0; j < coils_; ++j) {
    auto const v = op(echo, j).normal(u);
    for (Index p = 0; p < out.size(); ++p) { out[p] += v[p]; }
  }
  return out;
}

auto EchoSystem::gradient(Index echo, ComplexImage const &u) const -> ComplexImage
{
  auto g = normal(echo, u);
  auto const &aty = back_projection(echo);
  for (Index p = 0; p < g.size(); ++p) { g[p] -= aty[p]; }
  return g;
}

auto EchoSystem::residual_sq(Index echo, ComplexImage const &u) const -> double
{
  double s = 0.0;
  for (Index j = 0; j < coils_; ++j) {
    auto const y = op(echo, j).forward(u);
    auto const &d = data(echo, j);
    for (Index p = 0; p < y.size(); ++p) { s += std::norm(y[p] - d[p]); }
  }
  return s;
}

auto AdmmState::zeros(Index rows, Index cols, EchoTimes const &times, double e_min) -> AdmmState
{
  AdmmState s;
  s.theta = filled(rows, cols, times, 0.0);
  s.xi = filled(rows, cols, times, 0.0);
  s.e = filled(rows, cols, times, e_min);
  s.b = filled(rows, cols, times, 0.0);
  s.h0 = RealImage(rows, cols);
  s.r2star = RealImage(rows, cols);
  return s;
}

void AdmmState::validate() const
{
  theta.validate();
  for (auto const *set : {&xi, &e, &b}) {
    set->validate();
    if (set->size() != theta.size()) { throw DimensionError("ADMM state echo counts differ"); }
    require_same_shape((*set)[0], theta[0], "ADMM state");
  }
  require_same_shape(h0, theta[0], "ADMM state h0");
  require_same_shape(r2star, theta[0], "ADMM state r2star");
}

auto echo_product(RealImage const &theta, RealImage const &xi) -> ComplexImage
{
  require_same_shape(theta, xi, "echo_product");
  ComplexImage u(xi.rows(), xi.cols());
  for (Index p = 0; p < u.size(); ++p) { u[p] = std::polar(xi[p], theta[p]); }
  return u;
}

auto weighted_q(EchoSystem const &sys, Index echo, ComplexImage const &u) -> ComplexImage
{
  auto g = sys.gradient(echo, u);
  double const kappa = sys.kappa(echo);
  for (Index p = 0; p < g.size(); ++p) { g[p] = kappa * u[p] - 2.0 * g[p]; }
  return g;
}

auto weighted_q(AdmmState const &state, EchoSystem const &sys) -> ComplexEchoSet
{
  ComplexEchoSet out{{}, state.xi.times};
  for (Index i = 0; i < state.xi.size(); ++i) {
    out.echoes.push_back(weighted_q(sys, i, echo_product(state.theta[i], state.xi[i])));
  }
  return out;
}

auto update_theta(RealImage const &theta_old, ComplexImage const &kq) -> RealImage
{
  require_same_shape(theta_old, kq, "update_theta");
  RealImage theta(theta_old.rows(), theta_old.cols());
  for (Index p = 0; p < kq.size(); ++p) {
    if (kq[p] == Complex(0.0, 0.0)) {
      theta[p] = theta_old[p];
      continue;
    }
    double a = std::arg(kq[p]);
    if (a < 0.0) { a += kTwoPi; }
    if (a >= kTwoPi) { a = 0.0; }
    theta[p] = a;
  }
  return theta;
}

auto update_theta(AdmmState const &state, EchoSystem const &sys) -> RealEchoSet
{
  auto const kq = weighted_q(state, sys);
  RealEchoSet out{{}, state.theta.times};
  for (Index i = 0; i < kq.size(); ++i) { out.echoes.push_back(update_theta(state.theta[i], kq[i])); }
  return out;
}

auto update_xi(AdmmState const &state, ComplexEchoSet const &kq, EchoSystem const &sys, ReconParams const &params,
               WaveletFrame const &frame, std::vector<std::vector<double>> *duals) -> RealEchoSet
{
  if (duals && static_cast<Index>(duals->size()) != state.xi.size()) {
    duals->resize(static_cast<std::size_t>(state.xi.size()));
  }
  RealEchoSet out{{}, state.xi.times};
  for (Index i = 0; i < state.xi.size(); ++i) {
    out.echoes.push_back(xi_step(state.theta[i], kq[i], &state.b[i], &state.e[i], params.rho, sys.kappa(i),
                                 params.lambda1, params.prox_iters, frame,
                                 duals ? &(*duals)[static_cast<std::size_t>(i)] : nullptr));
  }
  return out;
}

auto update_xi(AdmmState const &state, EchoSystem const &sys, ReconParams const &params, WaveletFrame const &frame)
  -> RealEchoSet
{
  // Q is formed at the current U, i.e. with the phase the state held before
  // this step; callers wanting the full step update theta first.
  return update_xi(state, weighted_q(state, sys), sys, params, frame);
}

auto zx_objective(AdmmState const &state, EchoSystem const &sys, ReconParams const &params, WaveletFrame const &frame,
                  bool with_coupling) -> double
{
  double obj = 0.0;
  for (Index i = 0; i < state.xi.size(); ++i) {
    obj += sys.residual_sq(i, echo_product(state.theta[i], state.xi[i]));
    if (params.lambda1 > 0.0) { obj += params.lambda1 * l1_norm(frame.forward(state.xi[i])); }
    if (with_coupling) {
      for (Index p = 0; p < state.xi[i].size(); ++p) {
        double const d = state.xi[i][p] - state.e[i][p];
        obj += state.b[i][p] * d + 0.5 * params.rho * d * d;
      }
    }
  }
  return obj;
}

auto solve_zx(AdmmState &state, EchoSystem const &sys, ReconParams const &params, WaveletFrame const &frame,
              int iters, double tol, std::vector<std::vector<double>> &duals, bool with_coupling) -> StageReport
{
  duals.resize(static_cast<std::size_t>(state.xi.size()));
  double const rho = with_coupling ? params.rho : 0.0;
  StageReport report{0, 0.0, true};
  for (Index i = 0; i < state.xi.size(); ++i) {
    auto u = echo_product(state.theta[i], state.xi[i]);
    auto y = u;
    double t = 1.0;
    int k = 0;
    double change = 0.0;
    bool converged = false;
    while (k < iters) {
      ++k;
      auto const kq = weighted_q(sys, i, y);
      state.theta[i] = update_theta(state.theta[i], kq);
      state.xi[i] = xi_step(state.theta[i], kq, with_coupling ? &state.b[i] : nullptr,
                            with_coupling ? &state.e[i] : nullptr, rho, sys.kappa(i), params.lambda1,
                            params.prox_iters, frame, &duals[static_cast<std::size_t>(i)]);
      auto const u_next = echo_product(state.theta[i], state.xi[i]);

      double along = 0.0;
      double diff = 0.0;
      for (Index p = 0; p < u.size(); ++p) {
        Complex const step = u_next[p] - u[p];
        along += std::real(std::conj(y[p] - u_next[p]) * step);
        diff += std::norm(step);
      }
      change = std::sqrt(diff) / std::max(norm2(u_next), std::numeric_limits<double>::min());
      if (along > 0.0) {
        t = 1.0;
        y = u_next;
      } else {
        double const t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        double const beta = (t - 1.0) / t_next;
        for (Index p = 0; p < u.size(); ++p) { y[p] = u_next[p] + beta * (u_next[p] - u[p]); }
        t = t_next;
      }
      u = u_next;
      if (change <= tol) {
        converged = true;
        break;
      }
    }
    report.iterations = std::max(report.iterations, k);
    report.relative_change = std::max(report.relative_change, change);
    report.converged = report.converged && converged;
  }
  return report;
}

auto log_domain_loss(std::span<double const> x, EchoTimes const &times, double h0, double r2star) -> double
{
  if (static_cast<Index>(x.size()) != times.size()) { throw DimensionError("log_domain_loss: echo count mismatch"); }
  double s = 0.0;
  for (Index i = 0; i < times.size(); ++i) {
    double const v = x[static_cast<std::size_t>(i)];
    double const d = h0 - times[i] * r2star - std::log(v);
    s += v * v * d * d;
  }
  return s;
}

auto nonlinear_loss(std::span<double const> x, EchoTimes const &times, double h0, double r2star) -> double
{
  if (static_cast<Index>(x.size()) != times.size()) { throw DimensionError("nonlinear_loss: echo count mismatch"); }
  double s = 0.0;
  for (Index i = 0; i < times.size(); ++i) {
    double const d = x[static_cast<std::size_t>(i)] - std::exp(h0 - times[i] * r2star);
    s += d * d;
  }
  return s;
}

auto log_linear_fit(RealEchoSet const &echoes, double e_min, double r_max) -> LogFit
{
  echoes.validate();
  echoes.times.require_fittable();
  auto const s = fit_sums(echoes, e_min);
  LogFit fit{RealImage(echoes[0].rows(), echoes[0].cols()), RealImage(echoes[0].rows(), echoes[0].cols()), 0, true};
  closed_form(s, r_max, fit.h0, fit.r2star);
  return fit;
}

auto fit_objective(RealEchoSet const &echoes, RealImage const &h0, RealImage const &r2star, double lambda2,
                   double lambda3, double e_min, WaveletFrame const &frame) -> double
{
  double obj = 0.0;
  for (Index i = 0; i < echoes.size(); ++i) {
    double const t = echoes.times[i];
    for (Index p = 0; p < h0.size(); ++p) {
      double const v = echoes[i][p];
      if (!(v > e_min)) { continue; }
      double const d = h0[p] - t * r2star[p] - std::log(v);
      obj += v * v * d * d;
    }
  }
  if (lambda2 > 0.0) { obj += lambda2 * l1_norm(frame.forward(h0)); }
  if (lambda3 > 0.0) { obj += lambda3 * l1_norm(frame.forward(r2star)); }
  return obj;
}

auto weighted_log_fit(RealEchoSet const &echoes, LogFitOptions const &opt, WaveletFrame const &frame,
                      LogFitWarm *warm) -> LogFit
{
  echoes.validate();
  echoes.times.require_fittable();
  if (opt.lambda2 < 0.0 || opt.lambda3 < 0.0) { throw InvalidArgument("fit regularisation weights must be >= 0"); }
  if (!(opt.e_min > 0.0)) { throw InvalidArgument("e_min must be positive"); }
  auto const s = fit_sums(echoes, opt.e_min);
  Index const rows = echoes[0].rows();
  Index const cols = echoes[0].cols();
  LogFit fit{RealImage(rows, cols), RealImage(rows, cols), 0, false};

  bool const warm_ok = warm && warm->h0.rows() == rows && warm->h0.cols() == cols && warm->r2star.rows() == rows &&
                       warm->r2star.cols() == cols;
  if (opt.lambda2 == 0.0 && opt.lambda3 == 0.0) {
    closed_form(s, opt.r_max, fit.h0, fit.r2star);
    fit.converged = true;
  } else {
    if (warm_ok) {
      fit.h0 = warm->h0;
      fit.r2star = warm->r2star;
      for (auto &v : fit.r2star) { v = std::clamp(v, 0.0, opt.r_max); }
    } else {
      closed_form(s, opt.r_max, fit.h0, fit.r2star);
    }
    std::vector<double> h_dual;
    std::vector<double> r_dual;
    if (warm_ok) {
      h_dual = warm->h0_dual;
      r_dual = warm->r2_dual;
    }
    auto const res = regularised_fit(s, opt, frame, fit.h0, fit.r2star, h_dual, r_dual);
    fit.iterations = res.first;
    fit.converged = res.second;
    if (warm) {
      warm->h0_dual = std::move(h_dual);
      warm->r2_dual = std::move(r_dual);
    }
  }
  if (warm) {
    warm->h0 = fit.h0;
    warm->r2star = fit.r2star;
  }
  return fit;
}

auto update_e(AdmmState const &state, ReconParams const &params, double e_max) -> RealEchoSet
{
  if (!(params.e_min > 0.0 && e_max > params.e_min)) { throw InvalidArgument("update_e requires 0 < e_min < e_max"); }
  double const d_lo = std::log(params.e_min);
  double const d_hi = std::log(e_max);
  RealEchoSet out{{}, state.xi.times};
  for (Index i = 0; i < state.xi.size(); ++i) {
    double const t = state.xi.times[i];
    RealImage e(state.xi[i].rows(), state.xi[i].cols());
    for (Index p = 0; p < e.size(); ++p) {
      double const w = state.h0[p] - t * state.r2star[p];
      auto const m = global_min_1d_e(state.xi[i][p], w, state.b[i][p], params.rho, params.lambda, d_lo, d_hi);
      e[p] = std::exp(m.d);
    }
    out.echoes.push_back(std::move(e));
  }
  return out;
}

auto update_dual(AdmmState const &state, ReconParams const &params) -> RealEchoSet
{
  RealEchoSet out = state.b;
  for (Index i = 0; i < out.size(); ++i) {
    for (Index p = 0; p < out[i].size(); ++p) { out[i][p] += params.rho * (state.xi[i][p] - state.e[i][p]); }
  }
  return out;
}

auto primal_residual(AdmmState const &state) -> double
{
  double total = 0.0;
  for (Index i = 0; i < state.xi.size(); ++i) {
    double s = 0.0;
    for (Index p = 0; p < state.xi[i].size(); ++p) {
      double const d = state.xi[i][p] - state.e[i][p];
      s += d * d;
    }
    total += std::sqrt(s);
  }
  return total;
}

} // namespace relaxmap
