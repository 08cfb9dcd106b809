#pragma once

#include <span>
#include <vector>

#include "relaxmap/fourier.hpp"
#include "relaxmap/phantom.hpp"
#include "relaxmap/types.hpp"
#include "relaxmap/wavelet.hpp"

namespace relaxmap {

// The measurement operators of one slice: A_ij for every echo and coil, the
// back-projected data sum_j A_ij* Y_ij, and the majorisation constants
// kappa_ij. kappa_i = sum_j kappa_ij = 2 * 1.05 * ||sum_j A_ij* A_ij||, split
// evenly across coils.
class EchoSystem {
 public:
  EchoSystem(KSpaceData const &data, CoilSet const &coils, int power_iters = 50);

  [[nodiscard]] auto echoes() const -> Index { return echoes_; }
  [[nodiscard]] auto coils() const -> Index { return coils_; }
  [[nodiscard]] auto rows() const -> Index { return rows_; }
  [[nodiscard]] auto cols() const -> Index { return cols_; }
  [[nodiscard]] auto times() const -> EchoTimes const & { return times_; }
  [[nodiscard]] auto op(Index echo, Index coil) const -> SamplingOperator const &
  {
    return ops_[static_cast<std::size_t>(echo * coils_ + coil)];
  }
  [[nodiscard]] auto data(Index echo, Index coil) const -> ComplexImage const &
  {
    return data_[static_cast<std::size_t>(echo * coils_ + coil)];
  }

  // sum_j A_ij* A_ij u
  [[nodiscard]] auto normal(Index echo, ComplexImage const &u) const -> ComplexImage;
  // sum_j A_ij* Y_ij
  [[nodiscard]] auto back_projection(Index echo) const -> ComplexImage const & { return aty_[static_cast<std::size_t>(echo)]; }
  // sum_j (A_ij* A_ij u - A_ij* Y_ij), half the gradient of sum_j ||A_ij u - Y_ij||^2
  [[nodiscard]] auto gradient(Index echo, ComplexImage const &u) const -> ComplexImage;
  // sum_j ||A_ij u - Y_ij||^2
  [[nodiscard]] auto residual_sq(Index echo, ComplexImage const &u) const -> double;

  [[nodiscard]] auto kappa(Index echo) const -> double { return kappa_[static_cast<std::size_t>(echo)]; }
  [[nodiscard]] auto kappa(Index echo, Index) const -> double { return kappa(echo) / static_cast<double>(coils_); }
  // Largest eigenvalue estimate of sum_j A_ij* A_ij.
  [[nodiscard]] auto lipschitz(Index echo) const -> double { return lmax_[static_cast<std::size_t>(echo)]; }

 private:
  Index echoes_;
  Index coils_;
  Index rows_;
  Index cols_;
  EchoTimes times_;
  std::vector<SamplingOperator> ops_;
  std::vector<ComplexImage> data_;
  std::vector<ComplexImage> aty_;
  std::vector<double> lmax_;
  std::vector<double> kappa_;
};

struct AdmmState {
  RealEchoSet theta; // [0, 2pi)
  RealEchoSet xi;    // >= 0
  RealEchoSet e;     // in [e_min, e_max]
  RealEchoSet b;     // duals
  RealImage h0;
  RealImage r2star;
  int iteration = 0;

  // Zero phase, images, duals and maps; E at e_min.
  static auto zeros(Index rows, Index cols, EchoTimes const &times, double e_min) -> AdmmState;
  void validate() const;
};

// U_i = Z_i X_i
auto echo_product(RealImage const &theta, RealImage const &xi) -> ComplexImage;

// sum_j kappa_ij Q_ij = kappa_i U - 2 sum_j grad f_j(U) for one echo.
auto weighted_q(EchoSystem const &sys, Index echo, ComplexImage const &u) -> ComplexImage;
auto weighted_q(AdmmState const &state, EchoSystem const &sys) -> ComplexEchoSet;

// Theta_i = Ang(sum_j kappa_ij Q_ij) in [0, 2pi); unchanged where that sum is 0.
auto update_theta(RealImage const &theta_old, ComplexImage const &kq) -> RealImage;
auto update_theta(AdmmState const &state, EchoSystem const &sys) -> RealEchoSet;

// X_i from the majorised Z/X problem with the current theta:
//   V = (Re(conj(Z) sum_j kappa_ij Q_ij) - B + rho E) / (rho + kappa_i),
//   X = max(prox_{tau ||Phi .||_1}(V), 0),  tau = lambda1 / (rho + kappa_i).
// `duals` warm-starts the prox (one entry per echo, resized as needed).
auto update_xi(AdmmState const &state, ComplexEchoSet const &kq, EchoSystem const &sys, ReconParams const &params,
               WaveletFrame const &frame, std::vector<std::vector<double>> *duals = nullptr) -> RealEchoSet;
auto update_xi(AdmmState const &state, EchoSystem const &sys, ReconParams const &params, WaveletFrame const &frame)
  -> RealEchoSet;

// sum_ij ||A_ij Z_i X_i - Y_ij||^2 + lambda1 sum_i ||Phi X_i||_1
//   + sum_i <B_i, X_i - E_i> + rho/2 ||X_i - E_i||^2
// The coupling terms are dropped when `with_coupling` is false.
auto zx_objective(AdmmState const &state, EchoSystem const &sys, ReconParams const &params, WaveletFrame const &frame,
                  bool with_coupling = true) -> double;

struct StageReport {
  int iterations = 0;
  double relative_change = 0.0;
  bool converged = false;
};

// Alternating theta/X updates with momentum on U_i (restarted when the step
// turns against the momentum), per echo, until the relative change of U falls
// below tol or `iters` is spent. With with_coupling = false the B and rho
// terms are left out (first pass before E exists).
auto solve_zx(AdmmState &state, EchoSystem const &sys, ReconParams const &params, WaveletFrame const &frame,
              int iters, double tol, std::vector<std::vector<double>> &duals, bool with_coupling = true)
  -> StageReport;

struct LogFitOptions {
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double e_min = 1e-6;
  double r_max = 1.0;
  int iters = 100;
  double tol = 1e-6;
};

struct LogFit {
  RealImage h0;
  RealImage r2star;
  int iterations = 0;
  bool converged = false;
};

// Warm start and prox duals carried between calls.
struct LogFitWarm {
  RealImage h0;
  RealImage r2star;
  std::vector<double> h0_dual;
  std::vector<double> r2_dual;
};

// min_{H0, R2*} sum_i w_i (H0 - t_i R2* - log F_i)^2 + lambda2 ||Phi H0||_1 + lambda3 ||Phi R2*||_1
// with w_i = F_i^2 (0 where F_i <= e_min) and R2* kept in [0, r_max].
// Starts from the per-pixel weighted least-squares solution (or `warm`) and
// runs a primal-dual (Chambolle-Pock) iteration with an exact 2x2 solve per
// pixel. Pixels with no usable echo get 0.
auto weighted_log_fit(RealEchoSet const &echoes, LogFitOptions const &opt, WaveletFrame const &frame,
                      LogFitWarm *warm = nullptr) -> LogFit;

auto fit_objective(RealEchoSet const &echoes, RealImage const &h0, RealImage const &r2star, double lambda2,
                   double lambda3, double e_min, WaveletFrame const &frame) -> double;

// Per-pixel losses of one decay curve: the weighted log-domain loss
//   sum_i x_i^2 (h0 - t_i r2star - log x_i)^2
// and the nonlinear loss sum_i (x_i - exp(h0 - t_i r2star))^2 it approximates.
auto log_domain_loss(std::span<double const> x, EchoTimes const &times, double h0, double r2star) -> double;
auto nonlinear_loss(std::span<double const> x, EchoTimes const &times, double h0, double r2star) -> double;

// Per-pixel closed-form weighted least squares (no regularisation, R2* clamped).
auto log_linear_fit(RealEchoSet const &echoes, double e_min, double r_max) -> LogFit;

// E_i = exp(argmin over [log e_min, log e_max] of
//   rho/2 (X_i - e^d)^2 + lambda e^{2d} (d - W_i)^2 + B_i (X_i - e^d)),
// W_i = H0 - t_i R2*.
auto update_e(AdmmState const &state, ReconParams const &params, double e_max) -> RealEchoSet;

// B_i + rho (X_i - E_i)
auto update_dual(AdmmState const &state, ReconParams const &params) -> RealEchoSet;

// sum_i ||X_i - E_i||_2
auto primal_residual(AdmmState const &state) -> double;

} // namespace relaxmap
