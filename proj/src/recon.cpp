#include "relaxmap/recon.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "relaxmap/error.hpp"
#include "relaxmap/metrics.hpp"
#include "relaxmap/solvers.hpp"

namespace relaxmap {

namespace {

using Clock = std::chrono::steady_clock;

auto seconds_since(Clock::time_point t0) -> double
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_inputs(KSpaceData const &data, CoilSet const &coils, ReconParams const &params)
{
  params.validate();
  data.validate();
  data.times.require_fittable();
  coils.validate();
}

auto fit_options(ReconParams const &p, int iters) -> LogFitOptions
{
  return {p.lambda2, p.lambda3, p.e_min, p.r_max, iters, p.tol_change};
}

auto exp_image(RealImage const &h) -> RealImage
{
  RealImage x(h.rows(), h.cols());
  for (Index p = 0; p < h.size(); ++p) { x[p] = std::exp(h[p]); }
  return x;
}

auto relative_change(RealEchoSet const &now, RealEchoSet const &before) -> double
{
  double num = 0.0;
  double den = 0.0;
  for (Index i = 0; i < now.size(); ++i) {
    for (Index p = 0; p < now[i].size(); ++p) {
      double const d = now[i][p] - before[i][p];
      num += d * d;
      den += now[i][p] * now[i][p];
    }
  }
  return std::sqrt(num) / std::max(std::sqrt(den), std::numeric_limits<double>::min());
}

auto image_change(RealImage const &now, RealImage const &before) -> double
{
  double num = 0.0;
  double den = 0.0;
  for (Index p = 0; p < now.size(); ++p) {
    double const d = now[p] - before[p];
    num += d * d;
    den += now[p] * now[p];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), std::numeric_limits<double>::min());
}

struct Workspace {
  EchoSystem sys;
  WaveletFrame frame;
  AdmmState state;
  std::vector<std::vector<double>> duals;
  LogFitWarm warm;
};

auto make_workspace(KSpaceData const &data, CoilSet const &coils, ReconParams const &params) -> Workspace
{
  EchoSystem sys(data, coils);
  WaveletFrame frame(sys.rows(), sys.cols(), params.wavelet_levels);
  auto state = AdmmState::zeros(sys.rows(), sys.cols(), data.times, params.e_min);
  return {std::move(sys), std::move(frame), std::move(state), {}, {}};
}

struct DecoupledPass {
  StageReport zx;
  LogFit fit;
};

// Both decoupled stages on ws.state; E is left untouched.
auto decoupled_pass(Workspace &ws, ReconParams const &params) -> DecoupledPass
{
  auto zx = solve_zx(ws.state, ws.sys, params, ws.frame, params.stage_iters, params.tol_change, ws.duals, false);
  auto fit = weighted_log_fit(ws.state.xi, fit_options(params, params.stage_iters), ws.frame, &ws.warm);
  ws.state.h0 = fit.h0;
  ws.state.r2star = fit.r2star;
  return {zx, std::move(fit)};
}

auto finish(AdmmState const &state, ConvergenceTrace trace) -> ReconResult
{
  return {exp_image(state.h0), state.r2star, state.h0, state.theta, state.xi, std::move(trace)};
}

} // namespace

auto method_name(MethodKind m) -> std::string
{
  switch (m) {
    case MethodKind::decoupled: return "decoupled";
    case MethodKind::joint_admm: return "joint";
    case MethodKind::model_based: return "model-based";
  }
  return "?";
}

auto parse_method(std::string const &name) -> MethodKind
{
  if (name == "decoupled" || name == "D") { return MethodKind::decoupled; }
  if (name == "joint" || name == "joint-admm" || name == "J") { return MethodKind::joint_admm; }
  if (name == "model-based" || name == "M") { return MethodKind::model_based; }
  throw InvalidArgument("unknown method '" + name + "' (expected decoupled, joint or model-based)");
}

auto joint_objective(EchoSystem const &sys, RealEchoSet const &theta, RealEchoSet const &xi, RealImage const &h0,
                     RealImage const &r2star, ReconParams const &params, WaveletFrame const &frame) -> double
{
  double obj = 0.0;
  for (Index i = 0; i < xi.size(); ++i) {
    obj += sys.residual_sq(i, echo_product(theta[i], xi[i]));
    if (params.lambda1 > 0.0) { obj += params.lambda1 * l1_norm(frame.forward(xi[i])); }
  }
  if (params.lambda > 0.0) {
    obj += params.lambda * fit_objective(xi, h0, r2star, params.lambda2, params.lambda3, params.e_min, frame);
  }
  return obj;
}

auto recon_decoupled(KSpaceData const &data, CoilSet const &coils, ReconParams const &params) -> ReconResult
{
  check_inputs(data, coils, params);
  auto const t0 = Clock::now();
  auto ws = make_workspace(data, coils, params);
  auto const pass = decoupled_pass(ws, params);

  ConvergenceTrace trace;
  double const obj = zx_objective(ws.state, ws.sys, params, ws.frame, false) +
                     fit_objective(ws.state.xi, ws.state.h0, ws.state.r2star, params.lambda2, params.lambda3,
                                   params.e_min, ws.frame);
  trace.records.push_back({1, 0.0, obj, pass.zx.relative_change, seconds_since(t0)});
  trace.converged = pass.zx.converged && pass.fit.converged;
  return finish(ws.state, std::move(trace));
}

auto recon_joint_admm(KSpaceData const &data, CoilSet const &coils, ReconParams const &params) -> ReconResult
{
  check_inputs(data, coils, params);
  auto t0 = Clock::now();
  auto ws = make_workspace(data, coils, params);
  auto &st = ws.state;
  ConvergenceTrace trace;

  // iteration 1: the decoupled pipeline with E := X and B = 0
  auto const first = decoupled_pass(ws, params);
  double xmax = 0.0;
  for (auto const &x : st.xi.echoes) { xmax = std::max(xmax, *std::max_element(x.begin(), x.end())); }
  double e_max = params.e_max > 0.0 ? params.e_max : 10.0 * xmax;
  if (!(e_max > params.e_min)) { e_max = std::max(1.0, 10.0 * params.e_min); }
  for (Index i = 0; i < st.xi.size(); ++i) {
    for (Index p = 0; p < st.xi[i].size(); ++p) { st.e[i][p] = std::clamp(st.xi[i][p], params.e_min, e_max); }
  }
  // the fit above ran on X; with E := X it is the fit on E as well
  st.e = update_e(st, params, e_max);
  st.b = update_dual(st, params);
  st.iteration = 1;

  auto record = [&](double change) {
    double const obj = zx_objective(st, ws.sys, params, ws.frame, true) +
                       params.lambda * fit_objective(st.e, st.h0, st.r2star, params.lambda2, params.lambda3,
                                                     params.e_min, ws.frame);
    double const res = primal_residual(st);
    trace.records.push_back({st.iteration, res, obj, change, seconds_since(t0)});
    t0 = Clock::now();
    return res;
  };
  double res = record(first.zx.relative_change);
  if (params.outer_iters == 1) {
    trace.converged = res <= params.tol_primal && first.zx.converged;
    return finish(st, std::move(trace));
  }

  for (int k = 2; k <= params.outer_iters; ++k) {
    auto const xi_old = st.xi;
    solve_zx(st, ws.sys, params, ws.frame, params.inner_iters, params.tol_change, ws.duals, true);
    auto fit = weighted_log_fit(st.e, fit_options(params, params.inner_iters), ws.frame, &ws.warm);
    st.h0 = std::move(fit.h0);
    st.r2star = std::move(fit.r2star);
    st.e = update_e(st, params, e_max);
    st.b = update_dual(st, params);
    st.iteration = k;
    double const change = relative_change(st.xi, xi_old);
    res = record(change);
    if (res <= params.tol_primal && change <= params.tol_change) {
      trace.converged = true;
      break;
    }
  }
  return finish(st, std::move(trace));
}

auto model_data_term(EchoSystem const &sys, RealImage const &x0, RealImage const &r2star, RealEchoSet const &theta)
  -> double
{
  double s = 0.0;
  for (Index i = 0; i < sys.echoes(); ++i) {
    double const t = sys.times()[i];
    ComplexImage u(x0.rows(), x0.cols());
    for (Index p = 0; p < u.size(); ++p) { u[p] = std::polar(x0[p] * std::exp(-t * r2star[p]), theta[i][p]); }
    s += sys.residual_sq(i, u);
  }
  return s;
}

auto model_data_gradient(EchoSystem const &sys, RealImage const &x0, RealImage const &r2star,
                         RealEchoSet const &theta) -> ModelGradient
{
  ModelGradient g{RealImage(x0.rows(), x0.cols()), RealImage(x0.rows(), x0.cols())};
  for (Index i = 0; i < sys.echoes(); ++i) {
    double const t = sys.times()[i];
    ComplexImage u(x0.rows(), x0.cols());
    for (Index p = 0; p < u.size(); ++p) { u[p] = std::polar(x0[p] * std::exp(-t * r2star[p]), theta[i][p]); }
    auto const half = sys.gradient(i, u);
    for (Index p = 0; p < u.size(); ++p) {
      double const decay = std::exp(-t * r2star[p]);
      Complex const z = std::polar(1.0, theta[i][p]);
      g.x0[p] += 2.0 * decay * std::real(std::conj(z) * half[p]);
      g.r2star[p] -= 2.0 * t * std::real(std::conj(u[p]) * half[p]);
    }
  }
  return g;
}

auto recon_model_based(KSpaceData const &data, CoilSet const &coils, ReconParams const &params) -> ReconResult
{
  check_inputs(data, coils, params);
  auto t0 = Clock::now();
  auto ws = make_workspace(data, coils, params);
  auto &sys = ws.sys;
  auto &frame = ws.frame;

  // warm start: decoupled stage 1 with lambda1, unregularised log fit
  auto init = params;
  init.lambda2 = 0.0;
  init.lambda3 = 0.0;
  decoupled_pass(ws, init);
  auto theta = ws.state.theta;
  RealImage x0 = exp_image(ws.state.h0);
  RealImage r2 = ws.state.r2star;
  for (Index p = 0; p < x0.size(); ++p) {
    bool any = false;
    for (Index i = 0; i < ws.state.xi.size(); ++i) { any = any || ws.state.xi[i][p] > params.e_min; }
    if (!any) { x0[p] = 0.0; }
  }

  double lx = 0.0;
  for (Index i = 0; i < sys.echoes(); ++i) { lx += sys.kappa(i); }
  double tmax = sys.times()[sys.echoes() - 1];
  double x0max = *std::max_element(x0.begin(), x0.end());
  double lr = std::max(1e-3 * lx * tmax * tmax * x0max * x0max, std::numeric_limits<double>::min());

  std::vector<double> x_dual;
  std::vector<double> r_dual;
  ConvergenceTrace trace;
  for (int k = 1; k <= params.outer_iters; ++k) {
    auto const x_old = x0;
    auto const r_old = r2;

    for (Index i = 0; i < sys.echoes(); ++i) {
      double const t = sys.times()[i];
      ComplexImage u(x0.rows(), x0.cols());
      for (Index p = 0; p < u.size(); ++p) { u[p] = std::polar(x0[p] * std::exp(-t * r2[p]), theta[i][p]); }
      theta[i] = update_theta(theta[i], weighted_q(sys, i, u));
    }

    auto const gx = model_data_gradient(sys, x0, r2, theta).x0;
    QuadL1Problem px{RealImage(x0.rows(), x0.cols()), params.lambda1 / lx, params.prox_iters};
    for (Index p = 0; p < x0.size(); ++p) { px.center[p] = x0[p] - gx[p] / lx; }
    x0 = fista_l1(px, frame, &x_dual);
    for (auto &v : x0) { v = std::max(v, 0.0); }

    double const f0 = model_data_term(sys, x0, r2, theta);
    auto const gr = model_data_gradient(sys, x0, r2, theta).r2star;
    double f_new = f0;
    for (int tries = 0; tries < 60; ++tries) {
      QuadL1Problem pr{RealImage(r2.rows(), r2.cols()), params.lambda2 / lr, params.prox_iters};
      for (Index p = 0; p < r2.size(); ++p) { pr.center[p] = r2[p] - gr[p] / lr; }
      auto dual_try = r_dual;
      auto cand = fista_l1(pr, frame, &dual_try);
      for (auto &v : cand) { v = std::clamp(v, 0.0, params.r_max); }
      double lin = 0.0;
      double quad = 0.0;
      for (Index p = 0; p < r2.size(); ++p) {
        double const d = cand[p] - r2[p];
        lin += gr[p] * d;
        quad += d * d;
      }
      f_new = model_data_term(sys, x0, cand, theta);
      if (f_new <= f0 + lin + 0.5 * lr * quad + 1e-12 * std::abs(f0)) {
        r2 = std::move(cand);
        r_dual = std::move(dual_try);
        break;
      }
      lr *= 2.0;
    }
    lr *= 0.8;

    double obj = f_new;
    if (params.lambda1 > 0.0) { obj += params.lambda1 * l1_norm(frame.forward(x0)); }
    if (params.lambda2 > 0.0) { obj += params.lambda2 * l1_norm(frame.forward(r2)); }
    double const change = image_change(x0, x_old) + image_change(r2, r_old);
    trace.records.push_back({k, 0.0, obj, change, seconds_since(t0)});
    t0 = Clock::now();
    if (change <= params.tol_change) {
      trace.converged = true;
      break;
    }
  }

  ReconResult out;
  out.h0 = RealImage(x0.rows(), x0.cols());
  for (Index p = 0; p < x0.size(); ++p) { out.h0[p] = std::log(std::max(x0[p], params.e_min)); }
  out.x0 = exp_image(out.h0);
  out.r2star = r2;
  out.theta = theta;
  out.xi = RealEchoSet{{}, sys.times()};
  for (Index i = 0; i < sys.echoes(); ++i) {
    RealImage x(x0.rows(), x0.cols());
    for (Index p = 0; p < x.size(); ++p) { x[p] = x0[p] * std::exp(-sys.times()[i] * r2[p]); }
    out.xi.echoes.push_back(std::move(x));
  }
  out.diagnostics = std::move(trace);
  return out;
}

auto reconstruct(ReconMethod const &method, KSpaceData const &data, CoilSet const &coils) -> ReconResult
{
  switch (method.kind) {
    case MethodKind::decoupled: return recon_decoupled(data, coils, method.params);
    case MethodKind::joint_admm: return recon_joint_admm(data, coils, method.params);
    case MethodKind::model_based: return recon_model_based(data, coils, method.params);
  }
  throw InvalidArgument("unknown reconstruction method");
}

auto TrainingTruth::from_phantom(Phantom const &phantom, EchoTimes const &times) -> TrainingTruth
{
  return {decay_images(phantom, times), phantom.x0, phantom.r2star, phantom.support};
}

auto tune_parameters(KSpaceData const &training, CoilSet const &coils, TrainingTruth const &truth,
                     ReconParams const &base, TuningGrids const &grids) -> TuningResult
{
  if (grids.lambda1.empty() || grids.lambda2.empty() || grids.lambda3.empty() || grids.lambda.empty() ||
      grids.rho.empty()) {
    throw InvalidArgument("tuning grids must all be non-empty");
  }
  check_inputs(training, coils, base);
  TuningResult out;
  out.best = base;

  auto ws = make_workspace(training, coils, base);
  auto const fresh = ws.state;

  // stage 1: lambda1 on the echo images
  double best_score = std::numeric_limits<double>::infinity();
  RealEchoSet best_xi;
  for (double l1 : grids.lambda1) {
    auto p = out.best;
    p.lambda1 = l1;
    ws.state = fresh;
    ws.duals.clear();
    solve_zx(ws.state, ws.sys, p, ws.frame, p.stage_iters, p.tol_change, ws.duals, false);
    double score = 0.0;
    for (Index i = 0; i < ws.state.xi.size(); ++i) {
      score += masked_relative_error(truth.xi[i], ws.state.xi[i], truth.mask);
    }
    score /= static_cast<double>(ws.state.xi.size());
    out.table.push_back({"x", p, score});
    if (score < best_score) {
      best_score = score;
      best_xi = ws.state.xi;
      out.best.lambda1 = l1;
    }
  }

  auto map_score = [&](RealImage const &h0, RealImage const &r2) {
    return masked_relative_error(truth.r2star, r2, truth.mask) + masked_relative_error(truth.x0, exp_image(h0), truth.mask);
  };

  // stage 2: (lambda2, lambda3) on the decoupled fit
  best_score = std::numeric_limits<double>::infinity();
  auto const fixed1 = out.best;
  for (double l2 : grids.lambda2) {
    for (double l3 : grids.lambda3) {
      auto p = fixed1;
      p.lambda2 = l2;
      p.lambda3 = l3;
      auto const fit = weighted_log_fit(best_xi, fit_options(p, p.stage_iters), ws.frame);
      double const score = map_score(fit.h0, fit.r2star);
      out.table.push_back({"fit", p, score});
      if (score < best_score) {
        best_score = score;
        out.best.lambda2 = l2;
        out.best.lambda3 = l3;
      }
    }
  }

  // stage 3: (lambda, rho) for the joint reconstruction
  best_score = std::numeric_limits<double>::infinity();
  auto const fixed2 = out.best;
  for (double l : grids.lambda) {
    for (double rho : grids.rho) {
      auto p = fixed2;
      p.lambda = l;
      p.rho = rho;
      auto const r = recon_joint_admm(training, coils, p);
      double const score = map_score(r.h0, r.r2star);
      out.table.push_back({"joint", p, score});
      if (score < best_score) {
        best_score = score;
        out.best.lambda = l;
        out.best.rho = rho;
      }
    }
  }
  return out;
}

auto PreconditionReport::passed() const -> bool
{
  return enough_echoes && has_coils && std::all_of(echo_sampled.begin(), echo_sampled.end(), [](bool b) { return b; });
}

auto check_convergence_preconditions(KSpaceData const &data, EchoTimes const &times) -> PreconditionReport
{
  PreconditionReport r;
  r.enough_echoes = times.size() >= 2;
  if (!r.enough_echoes) { r.messages.push_back("fewer than two echo times"); }
  r.has_coils = data.coils >= 1;
  if (!r.has_coils) { r.messages.push_back("no receiver coils"); }
  for (Index i = 0; i < data.patterns.size(); ++i) {
    bool const ok = data.patterns[i].count() > 0;
    r.echo_sampled.push_back(ok);
    if (!ok) { r.messages.push_back("echo " + std::to_string(i + 1) + " has an empty sampling pattern"); }
  }
  if (data.patterns.size() == 0) { r.messages.push_back("no sampling patterns"); }
  return r;
}

} // namespace relaxmap
