// relaxmap command line: simulate, recon, sweep, compare-schemes, tune, export.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 every job failed
// numerically, 4 file error, 1 anything else.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "relaxmap/error.hpp"
#include "relaxmap/experiment.hpp"
#include "relaxmap/io.hpp"
#include "relaxmap/metrics.hpp"

using namespace relaxmap;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  int threads = 0;
};

void add_common(CLI::App *cmd, Common &c)
{
  cmd->add_option("-c,--config", c.config, "INI experiment config");
  cmd->add_option("--set", c.sets, "override a config key, section.key=value (repeatable)");
  cmd->add_option("-o,--out", c.out, "output directory (beats RELAXMAP_OUTPUT_DIR and output.dir)");
  cmd->add_option("-j,--threads", c.threads, "worker threads");
}

auto make_config(Common const &c) -> ExperimentConfig
{
  auto sets = c.sets;
  if (char const *env = std::getenv("RELAXMAP_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    sets.insert(sets.begin(), std::string("output.dir=") + env);
  }
  if (!c.out.empty()) { sets.push_back("output.dir=" + c.out); }
  if (c.threads > 0) { sets.push_back("output.threads=" + std::to_string(c.threads)); }
  return c.config.empty() ? parse_config("", sets) : load_config(c.config, sets);
}

auto rate_tag(double rate) -> std::string { return fmt::format("{:.4f}", rate); }

auto cmd_simulate(Common const &c) -> int
{
  auto const cfg = make_config(c);
  if (!cfg.kspace_file.empty()) { throw ConfigError("simulate does not take data.kspace"); }
  auto const dir = cfg.output_dir / "sim";
  save_coils(dir / "coils.coil", synth_coils(cfg.rows, cfg.cols, cfg.coils));
  for (Index s = 0; s < cfg.slices; ++s) {
    for (double rate : cfg.rates) {
      auto const sim = simulate_case(cfg, s, rate, cfg.scheme);
      auto const stem = fmt::format("s{}_r{}", s, rate_tag(rate));
      save_kspace(dir / (stem + ".ksp"), sim.data);
      if (rate == cfg.rates.front()) {
        save_real_image(dir / fmt::format("s{}_x0.img", s), sim.phantom.x0);
        save_real_image(dir / fmt::format("s{}_r2star.img", s), sim.phantom.r2star);
        save_real_image(dir / fmt::format("s{}_support.img", s), sim.phantom.support);
      }
      fmt::print("{}: rate {:.4f} (d_min {})\n", (dir / (stem + ".ksp")).string(), rate, sim.d_min);
    }
  }
  return 0;
}

struct ReconArgs {
  std::string kspace;
  std::string coils;
  std::string method = "joint";
  std::string truth_x0;
  std::string truth_r2star;
  std::string mask;
};

auto cmd_recon(Common const &c, ReconArgs const &a) -> int
{
  auto const cfg = make_config(c);
  auto const method = parse_method(a.method);
  auto const data = load_kspace(a.kspace);
  auto const coils = load_coils(a.coils);
  auto const res = reconstruct({method, cfg.params_for(method)}, data, coils);

  auto const dir = cfg.output_dir;
  auto const name = method_name(method);
  save_real_image(dir / (name + "_r2star.img"), res.r2star);
  save_real_image(dir / (name + "_x0.img"), res.x0);
  export_map_image(res.r2star, dir / (name + "_r2star.pgm"), cfg.r2_window.first, cfg.r2_window.second);
  export_map_image(res.x0, dir / (name + "_x0.pgm"), cfg.x0_window.first, cfg.x0_window.second);

  std::string trace = "iteration,primal_residual,objective,relative_change,seconds\n";
  for (auto const &r : res.diagnostics.records) {
    trace += fmt::format("{},{:.10g},{:.10g},{:.10g},{:.6f}\n", r.iteration, r.primal_residual, r.objective,
                         r.relative_change, r.seconds);
  }
  {
    std::ofstream out(dir / (name + "_trace.csv"));
    out << trace;
    if (!out) { throw IoError("cannot write trace to '" + dir.string() + "'"); }
  }

  fmt::print("{}: {} iterations, converged {}\n", name, res.diagnostics.iterations(),
             res.diagnostics.converged ? "yes" : "no");
  if (!a.truth_r2star.empty()) {
    auto const truth = load_real_image(a.truth_r2star);
    auto const mask = a.mask.empty() ? RealImage(truth.rows(), truth.cols(), 1.0) : load_real_image(a.mask);
    fmt::print("r2star error {:.6f}\n", masked_relative_error(truth, res.r2star, mask));
    if (!a.truth_x0.empty()) {
      fmt::print("x0 error {:.6f}\n", masked_relative_error(load_real_image(a.truth_x0), res.x0, mask));
    }
  }
  if (!all_finite(res.r2star) || !all_finite(res.x0)) {
    std::cerr << "reconstruction produced non-finite maps\n";
    return kExitNumeric;
  }
  return 0;
}

auto cmd_sweep(Common const &c) -> int
{
  auto const cfg = make_config(c);
  auto const res = run_experiment(cfg);
  std::cout << metrics_csv(res.rows, res.hash);
  for (auto const &r : res.rows) {
    if (r.failed) { std::cerr << fmt::format("slice {} rate {} {}: {}\n", r.slice, r.rate, method_name(r.method), r.message); }
  }
  return res.all_failed() ? kExitNumeric : 0;
}

auto cmd_compare(Common const &c) -> int
{
  auto const cfg = make_config(c);
  auto const rows = compare_schemes(cfg);
  std::cout << schemes_csv(rows, config_hash(cfg));
  bool const all_nan = std::all_of(rows.begin(), rows.end(), [](SchemeRow const &r) {
    return std::isnan(r.fixed_r2star) && std::isnan(r.complementary_r2star);
  });
  return !rows.empty() && all_nan ? kExitNumeric : 0;
}

struct TuneArgs {
  std::vector<double> lambda1{0.0, 1e-5, 3e-5, 1e-4};
  std::vector<double> lambda2{0.0};
  std::vector<double> lambda3{0.0, 0.01, 0.03};
  std::vector<double> lambda{0.01, 0.1, 1.0};
  std::vector<double> rho{0.01, 0.1, 1.0};
};

auto cmd_tune(Common const &c, TuneArgs const &a) -> int
{
  auto const cfg = make_config(c);
  if (!cfg.kspace_file.empty()) { throw ConfigError("tune needs simulated data with known truth"); }
  auto const sim = simulate_case(cfg, 0, cfg.rates.front(), cfg.scheme);
  auto const truth = TrainingTruth::from_phantom(sim.phantom, cfg.times());
  auto const res = tune_parameters(sim.data, sim.coils, truth, cfg.params_for(MethodKind::joint_admm),
                                   {a.lambda1, a.lambda2, a.lambda3, a.lambda, a.rho});

  std::string table = "stage,lambda1,lambda2,lambda3,lambda,rho,score\n";
  for (auto const &r : res.table) {
    table += fmt::format("{},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.10g}\n", r.stage, r.params.lambda1,
                         r.params.lambda2, r.params.lambda3, r.params.lambda, r.params.rho, r.score);
  }
  auto const &b = res.best;
  auto const best = fmt::format("[params]\nlambda1 = {:.6g}\nlambda2 = {:.6g}\nlambda3 = {:.6g}\n[joint]\nlambda = "
                                "{:.6g}\nrho = {:.6g}\n",
                                b.lambda1, b.lambda2, b.lambda3, b.lambda, b.rho);
  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream t(cfg.output_dir / "tuning.csv");
  t << table;
  std::ofstream p(cfg.output_dir / "best.ini");
  p << best;
  if (!t || !p) { throw IoError("cannot write tuning results to '" + cfg.output_dir.string() + "'"); }
  std::cout << table << "\n" << best;
  return 0;
}

struct ExportArgs {
  std::string image;
  std::string out;
  double lo = 0.0;
  double hi = 1.0;
};

auto cmd_export(ExportArgs const &a) -> int
{
  export_map_image(load_real_image(a.image), a.out, a.lo, a.hi);
  return 0;
}

} // namespace

auto main(int argc, char **argv) -> int
{
  CLI::App app{"relaxmap: compressive-sensing R2* mapping experiments"};
  app.require_subcommand(1);

  Common common;
  auto *simulate = app.add_subcommand("simulate", "simulate phantom k-space for every slice and rate");
  add_common(simulate, common);

  ReconArgs recon_args;
  auto *recon = app.add_subcommand("recon", "reconstruct one k-space container");
  add_common(recon, common);
  recon->add_option("--kspace", recon_args.kspace, "k-space container")->required();
  recon->add_option("--coils", recon_args.coils, "coil map file")->required();
  recon->add_option("-m,--method", recon_args.method, "decoupled, joint or model-based");
  recon->add_option("--truth-r2star", recon_args.truth_r2star, "reference R2* map for an error report");
  recon->add_option("--truth-x0", recon_args.truth_x0, "reference X0 map");
  recon->add_option("--mask", recon_args.mask, "error mask");

  auto *sweep = app.add_subcommand("sweep", "rates x methods x slices, metrics.csv and maps");
  add_common(sweep, common);

  auto *compare = app.add_subcommand("compare-schemes", "joint recovery, fixed vs complementary patterns");
  add_common(compare, common);

  TuneArgs tune_args;
  auto *tune = app.add_subcommand("tune", "three-stage parameter search on slice 0 at the first rate");
  add_common(tune, common);
  tune->add_option("--lambda1", tune_args.lambda1, "grid")->delimiter(',');
  tune->add_option("--lambda2", tune_args.lambda2, "grid")->delimiter(',');
  tune->add_option("--lambda3", tune_args.lambda3, "grid")->delimiter(',');
  tune->add_option("--lambda", tune_args.lambda, "grid")->delimiter(',');
  tune->add_option("--rho", tune_args.rho, "grid")->delimiter(',');

  ExportArgs export_args;
  auto *exp = app.add_subcommand("export", "render a real map file as PGM");
  exp->add_option("--image", export_args.image, "map file")->required();
  exp->add_option("--out", export_args.out, "PGM path")->required();
  exp->add_option("--lo", export_args.lo, "window low");
  exp->add_option("--hi", export_args.hi, "window high");

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    int const code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (simulate->parsed()) { return cmd_simulate(common); }
    if (recon->parsed()) { return cmd_recon(common, recon_args); }
    if (sweep->parsed()) { return cmd_sweep(common); }
    if (compare->parsed()) { return cmd_compare(common); }
    if (tune->parsed()) { return cmd_tune(common, tune_args); }
    if (exp->parsed()) { return cmd_export(export_args); }
  } catch (ConfigError const &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (InvalidArgument const &e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (InfeasiblePattern const &e) {
    std::cerr << "infeasible sampling: " << e.what() << "\n";
    return kExitConfig;
  } catch (IoError const &e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
