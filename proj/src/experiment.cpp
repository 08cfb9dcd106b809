#include "relaxmap/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "relaxmap/error.hpp"
#include "relaxmap/io.hpp"
#include "relaxmap/metrics.hpp"
#include "relaxmap/rng.hpp"

namespace relaxmap {

namespace pt = boost::property_tree;

auto default_params(MethodKind m) -> ReconParams
{
  ReconParams p;
  p.lambda1 = 3e-5;
  p.prox_iters = 2;
  if (m == MethodKind::joint_admm) {
    p.lambda = 0.1;
    p.rho = 0.1;
  }
  return p;
}

namespace {

auto scheme_name(PatternScheme s) -> std::string { return s == PatternScheme::fixed ? "fixed" : "complementary"; }

auto parse_scheme(std::string const &s) -> PatternScheme
{
  if (s == "fixed") { return PatternScheme::fixed; }
  if (s == "complementary") { return PatternScheme::complementary; }
  throw ConfigError("unknown sampling scheme '" + s + "' (expected fixed or complementary)");
}

auto trim(std::string s) -> std::string
{
  auto const b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) { return {}; }
  auto const e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

auto split_list(std::string const &s) -> std::vector<std::string>
{
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) { out.push_back(item); }
  }
  return out;
}

auto num(std::string const &v, std::string const &key) -> double
{
  try {
    std::size_t used = 0;
    double const d = std::stod(v, &used);
    if (trim(v.substr(used)).empty() && std::isfinite(d)) { return d; }
  } catch (std::exception const &) {
  }
  throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
}

auto integer(std::string const &v, std::string const &key) -> long long
{
  try {
    std::size_t used = 0;
    long long const i = std::stoll(v, &used);
    if (trim(v.substr(used)).empty()) { return i; }
  } catch (std::exception const &) {
  }
  throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
}

auto unsigned_int(std::string const &v, std::string const &key) -> std::uint64_t
{
  auto const i = integer(v, key);
  if (i < 0) { throw ConfigError("'" + key + "' must be nonnegative"); }
  return static_cast<std::uint64_t>(i);
}

auto boolean(std::string const &v, std::string const &key) -> bool
{
  if (v == "true" || v == "1" || v == "yes" || v == "on") { return true; }
  if (v == "false" || v == "0" || v == "no" || v == "off") { return false; }
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

auto window(std::string const &v, std::string const &key) -> std::pair<double, double>
{
  auto const parts = split_list(v);
  if (parts.size() != 2) { throw ConfigError("'" + key + "' expects 'lo, hi'"); }
  return {num(parts[0], key), num(parts[1], key)};
}

void set_param(ReconParams &p, std::string const &name, std::string const &v, std::string const &key)
{
  if (name == "lambda1") { p.lambda1 = num(v, key); }
  else if (name == "lambda2") { p.lambda2 = num(v, key); }
  else if (name == "lambda3") { p.lambda3 = num(v, key); }
  else if (name == "lambda") { p.lambda = num(v, key); }
  else if (name == "rho") { p.rho = num(v, key); }
  else if (name == "outer_iters") { p.outer_iters = static_cast<int>(integer(v, key)); }
  else if (name == "inner_iters") { p.inner_iters = static_cast<int>(integer(v, key)); }
  else if (name == "stage_iters") { p.stage_iters = static_cast<int>(integer(v, key)); }
  else if (name == "prox_iters") { p.prox_iters = static_cast<int>(integer(v, key)); }
  else if (name == "tol_primal") { p.tol_primal = num(v, key); }
  else if (name == "tol_change") { p.tol_change = num(v, key); }
  else if (name == "e_min") { p.e_min = num(v, key); }
  else if (name == "e_max") { p.e_max = num(v, key); }
  else if (name == "r_max") { p.r_max = num(v, key); }
  else if (name == "wavelet_levels") { p.wavelet_levels = static_cast<int>(integer(v, key)); }
  else { throw ConfigError("unknown parameter '" + key + "'"); }
}

void apply_override(pt::ptree &tree, std::string const &spec)
{
  auto const eq = spec.find('=');
  auto const dot = spec.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + spec + "' is not of the form section.key=value");
  }
  auto const section = trim(spec.substr(0, dot));
  auto const key = trim(spec.substr(dot + 1, eq - dot - 1));
  auto const value = trim(spec.substr(eq + 1));
  if (section.empty() || key.empty()) { throw ConfigError("override '" + spec + "' has an empty section or key"); }
  pt::ptree *body = nullptr;
  for (auto &[name, child] : tree) {
    if (name == section) { body = &child; }
  }
  if (body == nullptr) {
    tree.push_back({section, pt::ptree()});
    body = &tree.back().second;
  }
  bool found = false;
  for (auto &[name, leaf] : *body) {
    if (name == key) {
      leaf.data() = value;
      found = true;
    }
  }
  if (!found) { body->push_back({key, pt::ptree(value)}); }
}

auto from_tree(pt::ptree const &tree) -> ExperimentConfig
{
  ExperimentConfig cfg;

  for (auto const &[section, body] : tree) {
    if (!body.data().empty()) { throw ConfigError("key '" + section + "' is outside any section"); }
    for (auto const &[name, leaf] : body) {
      auto const key = section + "." + name;
      auto const v = trim(leaf.data());
      if (section == "phantom") {
        if (name == "preset") {
          try {
            cfg.preset = parse_preset(v);
          } catch (Error const &e) {
            throw ConfigError(e.what());
          }
        } else if (name == "seed") { cfg.phantom_seed = unsigned_int(v, key); }
        else if (name == "rows") { cfg.rows = integer(v, key); }
        else if (name == "cols") { cfg.cols = integer(v, key); }
        else if (name == "slices") { cfg.slices = integer(v, key); }
        else { throw ConfigError("unknown key '" + key + "'"); }
      } else if (section == "acquisition") {
        if (name == "coils") { cfg.coils = integer(v, key); }
        else if (name == "echoes") { cfg.echoes = integer(v, key); }
        else if (name == "te1") { cfg.te1 = num(v, key); }
        else if (name == "spacing") { cfg.spacing = num(v, key); }
        else if (name == "noise_sigma") { cfg.noise_sigma = num(v, key); }
        else if (name == "noise_seed") { cfg.noise_seed = unsigned_int(v, key); }
        else { throw ConfigError("unknown key '" + key + "'"); }
      } else if (section == "sampling") {
        if (name == "scheme") { cfg.scheme = parse_scheme(v); }
        else if (name == "rates") {
          cfg.rates.clear();
          for (auto const &r : split_list(v)) { cfg.rates.push_back(num(r, key)); }
        } else if (name == "d_min") { cfg.d_min = num(v, key); }
        else if (name == "calib_radius") { cfg.calib_radius = static_cast<int>(integer(v, key)); }
        else if (name == "seed") { cfg.sampling_seed = unsigned_int(v, key); }
        else { throw ConfigError("unknown key '" + key + "'"); }
      } else if (section == "recon") {
        if (name == "methods") {
          cfg.methods.clear();
          for (auto const &m : split_list(v)) {
            try {
              cfg.methods.push_back(parse_method(m));
            } catch (Error const &e) {
              throw ConfigError(e.what());
            }
          }
        } else { throw ConfigError("unknown key '" + key + "'"); }
      } else if (section == "params" || section == "decoupled" || section == "joint" || section == "model-based") {
        // checked here, applied per method below
        ReconParams probe;
        set_param(probe, name, v, key);
      } else if (section == "data") {
        if (name == "kspace") { cfg.kspace_file = v; }
        else if (name == "coils") { cfg.coils_file = v; }
        else { throw ConfigError("unknown key '" + key + "'"); }
      } else if (section == "output") {
        if (name == "dir") { cfg.output_dir = v; }
        else if (name == "threads") { cfg.threads = static_cast<int>(integer(v, key)); }
        else if (name == "images") { cfg.write_images = boolean(v, key); }
        else if (name == "r2_window") { cfg.r2_window = window(v, key); }
        else if (name == "x0_window") { cfg.x0_window = window(v, key); }
        else { throw ConfigError("unknown key '" + key + "'"); }
      } else {
        throw ConfigError("unknown section [" + section + "]");
      }
    }
  }

  // shared keys first, then the method's own section
  for (auto m : {MethodKind::decoupled, MethodKind::joint_admm, MethodKind::model_based}) {
    auto p = default_params(m);
    for (auto const &[section, body] : tree) {
      if (section != "params") { continue; }
      for (auto const &[name, leaf] : body) { set_param(p, name, trim(leaf.data()), section + "." + name); }
    }
    for (auto const &[section, body] : tree) {
      if (section != method_name(m)) { continue; }
      for (auto const &[name, leaf] : body) { set_param(p, name, trim(leaf.data()), section + "." + name); }
    }
    cfg.params[m] = p;
  }
  cfg.validate();
  return cfg;
}

} // namespace

void ExperimentConfig::validate() const
{
  if (rows < 8 || cols < 8) { throw ConfigError("grid must be at least 8x8"); }
  if (slices < 1) { throw ConfigError("slices must be >= 1"); }
  if (coils < 1) { throw ConfigError("coils must be >= 1"); }
  if (echoes < 2) { throw ConfigError("at least two echoes are needed for R2* mapping"); }
  if (!(te1 > 0.0) || !(spacing > 0.0)) { throw ConfigError("te1 and spacing must be positive"); }
  if (!(noise_sigma >= 0.0)) { throw ConfigError("noise_sigma must be >= 0"); }
  if (kspace_file.empty() && rates.empty()) { throw ConfigError("rate list is empty"); }
  for (double r : rates) {
    if (!(r > 0.0 && r <= 1.0)) { throw ConfigError(fmt::format("sampling rate {} is outside (0, 1]", r)); }
  }
  if (!(d_min >= 0.0)) { throw ConfigError("d_min must be >= 0"); }
  if (methods.empty()) { throw ConfigError("method list is empty"); }
  if (kspace_file.empty() != coils_file.empty()) {
    throw ConfigError("data.kspace and data.coils must be given together");
  }
  if (threads < 1) { throw ConfigError("threads must be >= 1"); }
  if (!(r2_window.first < r2_window.second) || !(x0_window.first < x0_window.second)) {
    throw ConfigError("image windows need lo < hi");
  }
  for (auto const &[m, p] : params) {
    try {
      p.validate();
    } catch (Error const &e) {
      throw ConfigError("[" + method_name(m) + "] " + e.what());
    }
  }
}

auto ExperimentConfig::params_for(MethodKind m) const -> ReconParams
{
  auto const it = params.find(m);
  return it == params.end() ? default_params(m) : it->second;
}

auto ExperimentConfig::times() const -> EchoTimes { return EchoTimes::uniform(echoes, te1, spacing); }

auto parse_config(std::string const &text, std::vector<std::string> const &overrides) -> ExperimentConfig
{
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (pt::ini_parser_error const &e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  for (auto const &o : overrides) { apply_override(tree, o); }
  return from_tree(tree);
}

auto load_config(fs::path const &path, std::vector<std::string> const &overrides) -> ExperimentConfig
{
  std::ifstream in(path);
  if (!in) { throw IoError("cannot open config '" + path.string() + "'"); }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

auto canonical_config(ExperimentConfig const &cfg) -> std::string
{
  auto g = [](double v) { return fmt::format("{:.17g}", v); };
  std::string s;
  s += fmt::format("[phantom]\npreset = {}\nseed = {}\nrows = {}\ncols = {}\nslices = {}\n", preset_name(cfg.preset),
                   cfg.phantom_seed, cfg.rows, cfg.cols, cfg.slices);
  s += fmt::format("[acquisition]\ncoils = {}\nechoes = {}\nte1 = {}\nspacing = {}\nnoise_sigma = {}\nnoise_seed = {}\n",
                   cfg.coils, cfg.echoes, g(cfg.te1), g(cfg.spacing), g(cfg.noise_sigma), cfg.noise_seed);
  s += fmt::format("[sampling]\nscheme = {}\nrates = ", scheme_name(cfg.scheme));
  for (std::size_t i = 0; i < cfg.rates.size(); ++i) { s += (i ? ", " : "") + g(cfg.rates[i]); }
  s += fmt::format("\nd_min = {}\ncalib_radius = {}\nseed = {}\n", g(cfg.d_min), cfg.calib_radius, cfg.sampling_seed);
  s += "[recon]\nmethods = ";
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) { s += (i ? ", " : "") + method_name(cfg.methods[i]); }
  s += "\n";
  for (auto m : {MethodKind::decoupled, MethodKind::joint_admm, MethodKind::model_based}) {
    auto const p = cfg.params_for(m);
    s += fmt::format("[{}]\nlambda1 = {}\nlambda2 = {}\nlambda3 = {}\nlambda = {}\nrho = {}\n", method_name(m),
                     g(p.lambda1), g(p.lambda2), g(p.lambda3), g(p.lambda), g(p.rho));
    s += fmt::format("outer_iters = {}\ninner_iters = {}\nstage_iters = {}\nprox_iters = {}\n", p.outer_iters,
                     p.inner_iters, p.stage_iters, p.prox_iters);
    s += fmt::format("tol_primal = {}\ntol_change = {}\ne_min = {}\ne_max = {}\nr_max = {}\nwavelet_levels = {}\n",
                     g(p.tol_primal), g(p.tol_change), g(p.e_min), g(p.e_max), g(p.r_max), p.wavelet_levels);
  }
  if (!cfg.kspace_file.empty()) {
    s += fmt::format("[data]\nkspace = {}\ncoils = {}\n", cfg.kspace_file.string(), cfg.coils_file.string());
  }
  return s;
}

auto fnv1a64(std::string const &bytes) -> std::uint64_t
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

auto config_hash(ExperimentConfig const &cfg) -> std::string
{
  return fmt::format("{:016x}", fnv1a64(canonical_config(cfg)));
}

auto simulate_case(ExperimentConfig const &cfg, Index slice, double rate, PatternScheme scheme) -> SimulatedCase
{
  auto const times = cfg.times();
  SimulatedCase out;
  auto const phantom_seed = cfg.phantom_seed + static_cast<std::uint64_t>(slice);
  out.phantom = make_phantom(cfg.rows, cfg.cols, cfg.preset, phantom_seed, times);
  out.coils = synth_coils(cfg.rows, cfg.cols, cfg.coils);

  AcquisitionSpec spec{times, out.coils, {}, cfg.noise_sigma};
  if (rate >= 1.0) {
    spec.patterns.scheme = scheme;
    for (Index i = 0; i < cfg.echoes; ++i) { spec.patterns.patterns.push_back(SamplingPattern::full(cfg.rows, cfg.cols)); }
    out.d_min = 1.0;
  } else {
    PoissonDiskArgs args{cfg.rows, cfg.cols, rate, cfg.d_min,
                         cfg.calib_radius < 0 ? default_calib_radius(cfg.rows, cfg.cols) : cfg.calib_radius,
                         mix_seed(cfg.sampling_seed, static_cast<std::uint64_t>(slice))};
    args.d_min = feasible_d_min(args);
    out.d_min = args.d_min;
    spec.patterns = make_echo_patterns(cfg.echoes, scheme, args);
  }
  out.data = simulate_kspace(out.phantom, spec, mix_seed(cfg.noise_seed, static_cast<std::uint64_t>(slice)));
  return out;
}

auto ExperimentResult::all_failed() const -> bool
{
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](MetricsRow const &r) { return r.failed; });
}

namespace {

auto csv_num(double v) -> std::string
{
  if (std::isnan(v)) { return "nan"; }
  return fmt::format("{:.10g}", v);
}

auto rate_tag(double rate) -> std::string { return fmt::format("{:.4f}", rate); }

auto method_order(MethodKind m) -> int { return static_cast<int>(m); }

auto finite_maps(ReconResult const &r) -> bool { return all_finite(r.r2star) && all_finite(r.x0); }

struct Job {
  Index slice;
  std::size_t rate_index;
  MethodKind method;
};

void write_text(fs::path const &path, std::string const &text)
{
  std::error_code ec;
  if (path.has_parent_path()) { fs::create_directories(path.parent_path(), ec); }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) { throw IoError("cannot open '" + path.string() + "' for writing"); }
  out << text;
  out.flush();
  if (!out) { throw IoError("write to '" + path.string() + "' failed"); }
}

} // namespace

auto metrics_csv(std::vector<MetricsRow> const &rows, std::string const &hash) -> std::string
{
  std::string s = "config_hash,slice,rate,method,achieved_rate,d_min,r2star_error,x0_error,iterations,converged,status\n";
  for (auto const &r : rows) {
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", hash, r.slice, csv_num(r.rate), method_name(r.method),
                     csv_num(r.achieved_rate), csv_num(r.d_min), csv_num(r.r2star_error), csv_num(r.x0_error),
                     r.iterations, r.converged ? 1 : 0, r.failed ? "failed" : "ok");
  }
  return s;
}

auto timings_csv(std::vector<TimingRow> const &rows, std::string const &hash) -> std::string
{
  std::string s = "config_hash,slice,rate,method,iteration,seconds\n";
  for (auto const &r : rows) {
    s += fmt::format("{},{},{},{},{},{:.6f}\n", hash, r.slice, csv_num(r.rate), method_name(r.method), r.iteration,
                     r.seconds);
  }
  return s;
}

void parallel_for(Index n, int threads, std::function<void(Index)> const &fn)
{
  std::atomic<Index> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (Index i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!first_error) { first_error = std::current_exception(); }
      }
    }
  };
  auto const count = static_cast<Index>(std::max(1, threads));
  std::vector<std::thread> pool;
  for (Index t = 1; t < std::min(count, n); ++t) { pool.emplace_back(worker); }
  worker();
  for (auto &t : pool) { t.join(); }
  if (first_error) { std::rethrow_exception(first_error); }
}

auto run_experiment(ExperimentConfig const &cfg) -> ExperimentResult
{
  cfg.validate();
  ExperimentResult result;
  result.hash = config_hash(cfg);

  bool const measured = !cfg.kspace_file.empty();
  std::optional<KSpaceData> loaded;
  std::optional<CoilSet> loaded_coils;
  std::vector<double> rates = cfg.rates;
  Index slices = cfg.slices;
  if (measured) {
    loaded = load_kspace(cfg.kspace_file);
    loaded_coils = load_coils(cfg.coils_file);
    double achieved = 0.0;
    for (Index i = 0; i < loaded->echoes; ++i) { achieved += loaded->patterns[i].rate(); }
    rates = {achieved / static_cast<double>(loaded->echoes)};
    slices = 1;
  }

  std::vector<Job> jobs;
  for (Index s = 0; s < slices; ++s) {
    for (std::size_t k = 0; k < rates.size(); ++k) {
      for (auto m : cfg.methods) { jobs.push_back({s, k, m}); }
    }
  }

  std::mutex mutex;
  parallel_for(static_cast<Index>(jobs.size()), cfg.threads, [&](Index j) {
    auto const &job = jobs[static_cast<std::size_t>(j)];
    double const rate = rates[job.rate_index];
    MetricsRow row{job.slice, rate, job.method, 0.0, 0.0, NAN, NAN, 0, false, false, {}};
    std::vector<TimingRow> times;
    std::optional<SimulatedCase> sim;
    KSpaceData const *data = nullptr;
    CoilSet const *coils = nullptr;
    if (measured) {
      data = &*loaded;
      coils = &*loaded_coils;
      row.achieved_rate = rate;
      row.d_min = data->patterns[0].d_min;
    } else {
      sim = simulate_case(cfg, job.slice, rate, cfg.scheme);
      data = &sim->data;
      coils = &sim->coils;
      double achieved = 0.0;
      for (Index i = 0; i < data->echoes; ++i) { achieved += data->patterns[i].rate(); }
      row.achieved_rate = achieved / static_cast<double>(data->echoes);
      row.d_min = sim->d_min;
    }

    std::optional<ReconResult> rec;
    try {
      rec = reconstruct({job.method, cfg.params_for(job.method)}, *data, *coils);
      row.iterations = rec->diagnostics.iterations();
      row.converged = rec->diagnostics.converged;
      for (auto const &r : rec->diagnostics.records) {
        times.push_back({job.slice, rate, job.method, r.iteration, r.seconds});
      }
      if (!finite_maps(*rec)) {
        row.failed = true;
        row.message = "non-finite maps";
      } else if (sim) {
        row.r2star_error = masked_relative_error(sim->phantom.r2star, rec->r2star, sim->phantom.support);
        row.x0_error = masked_relative_error(sim->phantom.x0, rec->x0, sim->phantom.support);
      }
    } catch (IoError const &) {
      throw;
    } catch (Error const &e) {
      row.failed = true;
      row.message = e.what();
    }

    if (cfg.write_images && rec && !row.failed) {
      auto const stem = fmt::format("s{}_r{}_{}", job.slice, rate_tag(rate), method_name(job.method));
      auto const dir = cfg.output_dir / "maps";
      export_map_image(rec->r2star, dir / (stem + "_r2star.pgm"), cfg.r2_window.first, cfg.r2_window.second);
      export_map_image(rec->x0, dir / (stem + "_x0.pgm"), cfg.x0_window.first, cfg.x0_window.second);
      if (sim && job.rate_index == 0 && job.method == cfg.methods.front()) {
        auto const truth = fmt::format("s{}_truth", job.slice);
        export_map_image(sim->phantom.r2star, dir / (truth + "_r2star.pgm"), cfg.r2_window.first,
                         cfg.r2_window.second);
        export_map_image(sim->phantom.x0, dir / (truth + "_x0.pgm"), cfg.x0_window.first, cfg.x0_window.second);
      }
    }

    std::lock_guard lock(mutex);
    result.rows.push_back(std::move(row));
    result.timings.insert(result.timings.end(), times.begin(), times.end());
  });

  auto key = [](auto const &r) { return std::make_tuple(r.slice, r.rate, method_order(r.method)); };
  std::sort(result.rows.begin(), result.rows.end(), [&](auto const &a, auto const &b) { return key(a) < key(b); });
  std::sort(result.timings.begin(), result.timings.end(), [&](auto const &a, auto const &b) {
    return std::make_tuple(a.slice, a.rate, method_order(a.method), a.iteration) <
           std::make_tuple(b.slice, b.rate, method_order(b.method), b.iteration);
  });

  write_text(cfg.output_dir / "metrics.csv", metrics_csv(result.rows, result.hash));
  write_text(cfg.output_dir / "timings.csv", timings_csv(result.timings, result.hash));
  write_text(cfg.output_dir / "config.ini", canonical_config(cfg));
  return result;
}

auto schemes_csv(std::vector<SchemeRow> const &rows, std::string const &hash) -> std::string
{
  std::string s = "config_hash,slice,rate,fixed_r2star_error,complementary_r2star_error,fixed_x0_error,"
                  "complementary_x0_error\n";
  for (auto const &r : rows) {
    s += fmt::format("{},{},{},{},{},{},{}\n", hash, r.slice, csv_num(r.rate), csv_num(r.fixed_r2star),
                     csv_num(r.complementary_r2star), csv_num(r.fixed_x0), csv_num(r.complementary_x0));
  }
  return s;
}

auto compare_schemes(ExperimentConfig const &cfg) -> std::vector<SchemeRow>
{
  cfg.validate();
  if (!cfg.kspace_file.empty()) { throw ConfigError("compare-schemes needs simulated data, not data.kspace"); }
  auto const params = cfg.params_for(MethodKind::joint_admm);
  struct Cell {
    Index slice;
    std::size_t rate_index;
    PatternScheme scheme;
    double r2 = NAN;
    double x0 = NAN;
  };
  std::vector<Cell> cells;
  for (Index s = 0; s < cfg.slices; ++s) {
    for (std::size_t k = 0; k < cfg.rates.size(); ++k) {
      for (auto sc : {PatternScheme::fixed, PatternScheme::complementary}) { cells.push_back({s, k, sc}); }
    }
  }
  parallel_for(static_cast<Index>(cells.size()), cfg.threads, [&](Index j) {
    auto &c = cells[static_cast<std::size_t>(j)];
    auto const sim = simulate_case(cfg, c.slice, cfg.rates[c.rate_index], c.scheme);
    try {
      auto const rec = recon_joint_admm(sim.data, sim.coils, params);
      if (finite_maps(rec)) {
        c.r2 = masked_relative_error(sim.phantom.r2star, rec.r2star, sim.phantom.support);
        c.x0 = masked_relative_error(sim.phantom.x0, rec.x0, sim.phantom.support);
      }
    } catch (IoError const &) {
      throw;
    } catch (Error const &) {
    }
  });

  std::vector<SchemeRow> rows;
  for (std::size_t i = 0; i + 1 < cells.size(); i += 2) {
    auto const &f = cells[i];
    auto const &c = cells[i + 1];
    rows.push_back({f.slice, cfg.rates[f.rate_index], f.r2, c.r2, f.x0, c.x0});
  }
  write_text(cfg.output_dir / "schemes.csv", schemes_csv(rows, config_hash(cfg)));
  return rows;
}

} // namespace relaxmap
