#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include <doctest.h>

#include "relaxmap/experiment.hpp"
#include "relaxmap/io.hpp"

using namespace relaxmap;
namespace fs = std::filesystem;

namespace {

auto read_bytes(fs::path const &p) -> std::string
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

auto small(fs::path const &out) -> std::vector<std::string>
{
  return {"phantom.rows=16", "phantom.cols=16", "output.dir=" + out.string(), "params.outer_iters=3",
          "params.stage_iters=20"};
}

auto count_lines(std::string const &s) -> std::size_t
{
  std::size_t n = 0;
  for (char c : s) { n += c == '\n' ? 1 : 0; }
  return n;
}

} // namespace

TEST_SUITE("cli-eval") {

TEST_CASE("defaults and per-method parameter layering")
{
  auto const cfg = parse_config(R"(
[sampling]
rates = 0.1, 0.3
scheme = complementary
[params]
lambda1 = 1e-4
[joint]
rho = 0.7
)");
  CHECK(cfg.rates == std::vector<double>{0.1, 0.3});
  CHECK(cfg.scheme == PatternScheme::complementary);
  CHECK(cfg.params_for(MethodKind::decoupled).lambda1 == 1e-4);
  CHECK(cfg.params_for(MethodKind::joint_admm).lambda1 == 1e-4);
  CHECK(cfg.params_for(MethodKind::joint_admm).rho == 0.7);
  CHECK(cfg.params_for(MethodKind::model_based).rho == default_params(MethodKind::model_based).rho);
  CHECK(cfg.methods.size() == 3);
  CHECK(cfg.times()[1] == doctest::Approx(13.05));
}

TEST_CASE("overrides beat the file")
{
  auto const cfg = parse_config("[phantom]\nrows = 32\n", {"phantom.rows=48", "output.threads=3", "joint.lambda=2"});
  CHECK(cfg.rows == 48);
  CHECK(cfg.threads == 3);
  CHECK(cfg.params_for(MethodKind::joint_admm).lambda == 2.0);
}

TEST_CASE("configuration errors")
{
  CHECK_THROWS_AS(parse_config("[nonsense]\na = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[phantom]\ncolour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[phantom]\nrows = many\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[phantom]\nrows = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[sampling]\nrates = 0.2, 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[sampling]\nscheme = spiral\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[recon]\nmethods =\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[recon]\nmethods = decoupled, magic\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[acquisition]\nechoes = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[params]\nlambda1 = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[params]\nwhatever = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[data]\nkspace = a.ksp\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[output]\nr2_window = 1, 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[phantom\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("", {"phantom.rows"}), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/relaxmap.ini"), IoError);
}

TEST_CASE("hash covers results, not output settings")
{
  auto const a = parse_config("");
  auto const b = parse_config("", {"output.dir=/elsewhere", "output.threads=4", "output.images=false"});
  auto const c = parse_config("", {"joint.rho=0.2"});
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(config_hash(a).size() == 16);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(parse_config(canonical_config(c)).params_for(MethodKind::joint_admm).rho == 0.2);
  CHECK(canonical_config(parse_config(canonical_config(c))) == canonical_config(c));
}

TEST_CASE("sweep writes one row per rate and method, deterministically")
{
  auto const base = fs::temp_directory_path() / "relaxmap_test_sweep";
  fs::remove_all(base);
  auto const a = parse_config("", small(base / "a"));
  auto const res = run_experiment(a);
  CHECK(res.rows.size() == 15);
  CHECK_FALSE(res.all_failed());
  for (auto const &r : res.rows) {
    CHECK_FALSE(r.failed);
    CHECK(r.r2star_error >= 0.0);
  }
  auto const csv = read_bytes(base / "a" / "metrics.csv");
  CHECK(count_lines(csv) == 16);
  CHECK(csv == metrics_csv(res.rows, res.hash));
  CHECK(fs::exists(base / "a" / "timings.csv"));
  CHECK(fs::exists(base / "a" / "maps" / "s0_r0.1000_joint_r2star.pgm"));
  CHECK(config_hash(load_config(base / "a" / "config.ini")) == res.hash);

  auto over = small(base / "b");
  over.push_back("output.threads=2");
  run_experiment(parse_config("", over));
  CHECK(read_bytes(base / "b" / "metrics.csv") == csv);
  CHECK(read_bytes(base / "b" / "maps" / "s0_r0.3000_model-based_x0.pgm") ==
        read_bytes(base / "a" / "maps" / "s0_r0.3000_model-based_x0.pgm"));
  fs::remove_all(base);
}

TEST_CASE("measured data replaces simulation")
{
  auto const base = fs::temp_directory_path() / "relaxmap_test_measured";
  fs::remove_all(base);
  auto const sim_cfg = parse_config("", small(base));
  auto const sim = simulate_case(sim_cfg, 0, 0.3, PatternScheme::fixed);
  save_kspace(base / "in" / "scan.ksp", sim.data);
  save_coils(base / "in" / "coils.coil", sim.coils);
  auto over = small(base / "out");
  over.push_back("data.kspace=" + (base / "in" / "scan.ksp").string());
  over.push_back("data.coils=" + (base / "in" / "coils.coil").string());
  auto const res = run_experiment(parse_config("", over));
  CHECK(res.rows.size() == 3);
  for (auto const &r : res.rows) { CHECK_FALSE(r.failed); }
  fs::remove_all(base);
}

TEST_CASE("full sampling makes the two schemes agree")
{
  auto const base = fs::temp_directory_path() / "relaxmap_test_schemes";
  fs::remove_all(base);
  auto over = small(base);
  over.push_back("sampling.rates=1.0");
  auto const rows = compare_schemes(parse_config("", over));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].fixed_r2star == rows[0].complementary_r2star);
  CHECK(rows[0].fixed_x0 == rows[0].complementary_x0);
  CHECK(fs::exists(base / "schemes.csv"));
  fs::remove_all(base);
}

TEST_CASE("simulated cases fall back to a feasible distance")
{
  ExperimentConfig cfg;
  cfg.rows = cfg.cols = 32;
  auto const low = simulate_case(cfg, 0, 0.1, PatternScheme::fixed);
  CHECK(low.d_min == 2.0);
  auto const high = simulate_case(cfg, 0, 0.5, PatternScheme::fixed);
  CHECK(high.d_min < 2.0);
  CHECK(std::abs(high.data.patterns[0].rate() - 0.5) <= 0.05);
  auto const other = simulate_case(cfg, 1, 0.1, PatternScheme::fixed);
  CHECK_FALSE(other.phantom.x0 == low.phantom.x0);
}

TEST_CASE("parallel_for runs every job and rethrows failures")
{
  std::atomic<int> sum{0};
  parallel_for(100, 3, [&](Index i) { sum += static_cast<int>(i); });
  CHECK(sum == 4950);
  CHECK_THROWS_AS(parallel_for(10, 2,
                               [](Index i) {
                                 if (i == 7) { throw std::runtime_error("boom"); }
                               }),
                  std::runtime_error);
}

}
