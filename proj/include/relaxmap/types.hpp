#pragma once

#include <vector>

#include "relaxmap/image.hpp"

namespace relaxmap {

// Echo times in milliseconds, strictly increasing. Single-echo protocols are
// representable (sampling, simulation); fitting requires two or more.
class EchoTimes {
 public:
  EchoTimes() = default;
  explicit EchoTimes(std::vector<double> times);

  // Uniformly spaced protocol: first echo at te1, then every `spacing` ms.
  static auto uniform(Index count, double te1, double spacing) -> EchoTimes;

  [[nodiscard]] auto size() const -> Index { return static_cast<Index>(times_.size()); }
  auto operator[](Index i) const -> double { return times_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] auto values() const -> std::vector<double> const & { return times_; }
  [[nodiscard]] auto first(Index keep) const -> EchoTimes;
  void require_fittable() const;

  auto operator==(EchoTimes const &) const -> bool = default;

 private:
  std::vector<double> times_;
};

template <typename T>
struct MultiEchoSet {
  std::vector<Image<T>> echoes;
  EchoTimes times;

  [[nodiscard]] auto size() const -> Index { return static_cast<Index>(echoes.size()); }
  auto operator[](Index i) -> Image<T> & { return echoes[static_cast<std::size_t>(i)]; }
  auto operator[](Index i) const -> Image<T> const & { return echoes[static_cast<std::size_t>(i)]; }

  void validate() const
  {
    if (echoes.empty()) { throw DimensionError("multi-echo set is empty"); }
    if (static_cast<Index>(echoes.size()) != times.size()) {
      throw DimensionError("echo count does not match echo-time count");
    }
    for (auto const &e : echoes) { require_same_shape(e, echoes.front(), "multi-echo set"); }
  }
};

using RealEchoSet = MultiEchoSet<double>;
using ComplexEchoSet = MultiEchoSet<Complex>;

// Receiver-coil sensitivity maps S_j.
struct CoilSet {
  std::vector<ComplexImage> maps;

  [[nodiscard]] auto size() const -> Index { return static_cast<Index>(maps.size()); }
  auto operator[](Index j) const -> ComplexImage const & { return maps[static_cast<std::size_t>(j)]; }
  [[nodiscard]] auto rows() const -> Index { return maps.front().rows(); }
  [[nodiscard]] auto cols() const -> Index { return maps.front().cols(); }
  // Root-sum-of-squares magnitude across coils.
  [[nodiscard]] auto rss() const -> RealImage;
  void validate() const;
};

struct ReconParams {
  double lambda1 = 0.0; // l1 weight on the echo images X_i (model-based: on X0)
  double lambda2 = 0.0; // l1 weight on H0 (model-based: on R2*)
  double lambda3 = 0.0; // l1 weight on R2*
  double lambda = 0.0;  // weight of the decay-model term in the joint problem
  double rho = 0.0;     // augmented-Lagrangian penalty

  int outer_iters = 50;  // ADMM / model-based outer iterations
  int inner_iters = 5;   // Z/X and H0/R2* proximal iterations per outer iteration
  int stage_iters = 100; // budget of a from-scratch stage (decoupled stages, first ADMM pass)
  int prox_iters = 10;   // dual FISTA iterations per analysis-l1 prox
  double tol_primal = 1e-3;
  double tol_change = 1e-4;

  double e_min = 1e-6;
  double e_max = 0.0; // 0 selects 10 x max observed magnitude
  double r_max = 1.0; // R2* upper clamp, 1/ms

  int wavelet_levels = 4;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double primal_residual = 0.0; // sum_i ||X_i - E_i||_2
  double objective = 0.0;
  double relative_change = 0.0;
  double seconds = 0.0;
};

struct ConvergenceTrace {
  std::vector<IterationRecord> records;
  bool converged = false;

  [[nodiscard]] auto iterations() const -> int { return static_cast<int>(records.size()); }
};

struct ReconResult {
  RealImage x0;
  RealImage r2star; // 1/ms
  RealImage h0;
  RealEchoSet theta; // radians in [0, 2pi)
  RealEchoSet xi;
  ConvergenceTrace diagnostics;
};

} // namespace relaxmap
