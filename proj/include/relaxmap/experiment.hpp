#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "relaxmap/phantom.hpp"
#include "relaxmap/recon.hpp"
#include "relaxmap/sampling.hpp"

namespace relaxmap {

namespace fs = std::filesystem;

// Parameters each method starts from when the config does not override them.
// Tuned on 64x64 shepp-like phantoms with four coils and four echoes.
auto default_params(MethodKind m) -> ReconParams;

struct ExperimentConfig {
  PhantomPreset preset = PhantomPreset::shepp_like;
  std::uint64_t phantom_seed = 1;
  Index rows = 64;
  Index cols = 64;
  Index slices = 1; // phantom seeds phantom_seed, phantom_seed + 1, ...

  Index coils = 4;
  Index echoes = 4;
  double te1 = 7.64;    // ms
  double spacing = 5.41; // ms
  double noise_sigma = 0.002;
  std::uint64_t noise_seed = 1;

  PatternScheme scheme = PatternScheme::fixed;
  std::vector<double> rates{0.1, 0.2, 0.3, 0.4, 0.5};
  double d_min = 2.0;
  int calib_radius = -1; // < 0 selects default_calib_radius
  std::uint64_t sampling_seed = 1;

  std::vector<MethodKind> methods{MethodKind::decoupled, MethodKind::joint_admm, MethodKind::model_based};
  std::map<MethodKind, ReconParams> params; // filled for every method by load/parse

  // Optional measured data instead of simulation (rates are then ignored).
  fs::path kspace_file;
  fs::path coils_file;

  fs::path output_dir = "results";
  int threads = 1;
  bool write_images = true;
  std::pair<double, double> r2_window{0.0, 0.25};
  std::pair<double, double> x0_window{0.0, 1.0};

  void validate() const;
  [[nodiscard]] auto params_for(MethodKind m) const -> ReconParams;
  [[nodiscard]] auto times() const -> EchoTimes;
};

// INI text with sections [phantom], [acquisition], [sampling], [recon],
// [params] (shared), [decoupled], [joint], [model-based] (per-method
// overrides), [data] and [output]. `overrides` are "section.key=value" strings
// applied on top of the file. Unknown sections or keys are ConfigErrors.
auto parse_config(std::string const &text, std::vector<std::string> const &overrides = {}) -> ExperimentConfig;
auto load_config(fs::path const &path, std::vector<std::string> const &overrides = {}) -> ExperimentConfig;

// Canonical text of everything that affects results (not output_dir, threads
// or image settings), and its 64-bit FNV-1a hash as 16 hex digits.
auto canonical_config(ExperimentConfig const &cfg) -> std::string;
auto config_hash(ExperimentConfig const &cfg) -> std::string;

auto fnv1a64(std::string const &bytes) -> std::uint64_t;

// One simulated acquisition of the configured phantom at one rate.
struct SimulatedCase {
  Phantom phantom;
  CoilSet coils;
  KSpaceData data;
  double d_min = 0.0; // distance actually used (see feasible_d_min)
};
auto simulate_case(ExperimentConfig const &cfg, Index slice, double rate, PatternScheme scheme) -> SimulatedCase;

struct MetricsRow {
  Index slice = 0;
  double rate = 0.0;
  MethodKind method = MethodKind::joint_admm;
  double achieved_rate = 0.0;
  double d_min = 0.0;
  double r2star_error = 0.0;
  double x0_error = 0.0;
  int iterations = 0;
  bool converged = false;
  bool failed = false; // exception or non-finite maps
  std::string message;
};

struct TimingRow {
  Index slice = 0;
  double rate = 0.0;
  MethodKind method = MethodKind::joint_admm;
  int iteration = 0;
  double seconds = 0.0;
};

struct ExperimentResult {
  std::vector<MetricsRow> rows;   // sorted by (slice, rate, method)
  std::vector<TimingRow> timings; // sorted likewise, then by iteration
  std::string hash;

  [[nodiscard]] auto all_failed() const -> bool;
};

// metrics.csv holds only deterministic columns; wall times go to timings.csv.
auto metrics_csv(std::vector<MetricsRow> const &rows, std::string const &hash) -> std::string;
auto timings_csv(std::vector<TimingRow> const &rows, std::string const &hash) -> std::string;

// Every (slice, rate, method) job runs on a pool of cfg.threads workers.
// Writes metrics.csv, timings.csv, config.ini (canonical) and, if enabled,
// PGM maps under output_dir.
auto run_experiment(ExperimentConfig const &cfg) -> ExperimentResult;

struct SchemeRow {
  Index slice = 0;
  double rate = 0.0;
  double fixed_r2star = 0.0;
  double complementary_r2star = 0.0;
  double fixed_x0 = 0.0;
  double complementary_x0 = 0.0;
};

// Joint recovery under the fixed and the complementary scheme on the same
// phantom, noise and base seed. Writes schemes.csv under output_dir.
auto compare_schemes(ExperimentConfig const &cfg) -> std::vector<SchemeRow>;
auto schemes_csv(std::vector<SchemeRow> const &rows, std::string const &hash) -> std::string;

// Runs fn(i) for i in [0, n) on `threads` workers (at least one). The first
// exception thrown by a job is rethrown after all workers finish.
void parallel_for(Index n, int threads, std::function<void(Index)> const &fn);

} // namespace relaxmap
