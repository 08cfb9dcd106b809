#pragma once

#include <string>
#include <vector>

#include "relaxmap/phantom.hpp"
#include "relaxmap/subproblems.hpp"
#include "relaxmap/types.hpp"

namespace relaxmap {

enum class MethodKind { decoupled, joint_admm, model_based };

auto method_name(MethodKind m) -> std::string;
// Accepts "decoupled"/"D", "joint"/"joint-admm"/"J", "model-based"/"M".
auto parse_method(std::string const &name) -> MethodKind;

struct ReconMethod {
  MethodKind kind = MethodKind::joint_admm;
  ReconParams params;
};

// Stage 1: alternating theta/X updates on
//   sum_ij ||Y_ij - A_ij Z_i X_i||^2 + lambda1 sum_i ||Phi X_i||_1
// (stage_iters budget, tol_change). Stage 2: weighted_log_fit with weights X_i^2.
auto recon_decoupled(KSpaceData const &data, CoilSet const &coils, ReconParams const &params) -> ReconResult;

// ADMM on the joint problem with consensus X_i = E_i. The first iteration is
// the decoupled pipeline (E := X, B = 0); later iterations run the Z/X step,
// the fit on E, the E step and the dual step with inner_iters budgets and
// warm starts, until the primal residual <= tol_primal and the relative change
// of X <= tol_change, or outer_iters is reached.
auto recon_joint_admm(KSpaceData const &data, CoilSet const &coils, ReconParams const &params) -> ReconResult;

// Baseline fitting X0 and R2* directly to the data:
//   sum_ij ||Y_ij - A_ij Z_i X0 exp(-t_i R2*)||^2 + lambda1 ||Phi X0||_1 + lambda2 ||Phi R2*||_1
// Closed-form phase step, then proximal gradient steps on X0 (fixed step from
// the operator norms) and R2* (backtracking). Starts from a decoupled run with
// the same lambda1 and an unregularised fit.
auto recon_model_based(KSpaceData const &data, CoilSet const &coils, ReconParams const &params) -> ReconResult;

auto reconstruct(ReconMethod const &method, KSpaceData const &data, CoilSet const &coils) -> ReconResult;

// The model-based data term and its gradients in X0 and R2* (theta fixed).
struct ModelGradient {
  RealImage x0;
  RealImage r2star;
};
auto model_data_term(EchoSystem const &sys, RealImage const &x0, RealImage const &r2star, RealEchoSet const &theta)
  -> double;
auto model_data_gradient(EchoSystem const &sys, RealImage const &x0, RealImage const &r2star,
                         RealEchoSet const &theta) -> ModelGradient;

// Objective of the joint problem:
//   sum_ij ||Y_ij - A_ij Z_i X_i||^2 + lambda1 sum_i ||Phi X_i||_1
//   + lambda (sum_i X_i^2 ||H0 - t_i R2* - log X_i||^2 + lambda2 ||Phi H0||_1 + lambda3 ||Phi R2*||_1)
auto joint_objective(EchoSystem const &sys, RealEchoSet const &theta, RealEchoSet const &xi, RealImage const &h0,
                     RealImage const &r2star, ReconParams const &params, WaveletFrame const &frame) -> double;

struct TrainingTruth {
  RealEchoSet xi; // true echo magnitudes
  RealImage x0;
  RealImage r2star;
  RealImage mask;

  static auto from_phantom(Phantom const &phantom, EchoTimes const &times) -> TrainingTruth;
};

struct TuningGrids {
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  std::vector<double> lambda3;
  std::vector<double> lambda;
  std::vector<double> rho;
};

struct TuningRow {
  std::string stage; // "x", "fit" or "joint"
  ReconParams params;
  double score = 0.0;
};

struct TuningResult {
  ReconParams best;
  std::vector<TuningRow> table;
};

// Three-stage grid search on a training slice with known truth:
//   1. lambda1 by the mean masked relative error of X_i after stage 1,
//   2. (lambda2, lambda3) by the R2* plus X0 error of the decoupled fit,
//   3. (lambda, rho) by the R2* plus X0 error of the joint reconstruction.
// Ties keep the earlier grid point.
auto tune_parameters(KSpaceData const &training, CoilSet const &coils, TrainingTruth const &truth,
                     ReconParams const &base, TuningGrids const &grids) -> TuningResult;

struct PreconditionReport {
  bool enough_echoes = false;
  bool has_coils = false;
  std::vector<bool> echo_sampled; // per echo: pattern non-empty
  std::vector<std::string> messages;

  [[nodiscard]] auto passed() const -> bool;
};

// Advisory checks that the joint problem is well posed: at least two echoes,
// at least one coil and a non-empty pattern on every echo.
auto check_convergence_preconditions(KSpaceData const &data, EchoTimes const &times) -> PreconditionReport;

} // namespace relaxmap
