#include "relaxmap/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "relaxmap/error.hpp"
#include "relaxmap/rng.hpp"

namespace relaxmap {

namespace {

// Slack on squared distances so that e.g. d_min = sqrt(2) admits diagonal
// neighbours despite sqrt(2)^2 rounding above 2.
constexpr double kDistanceSlack = 1e-9;

// Expected density of a maximal dart-throwing set with radius r is close to
// this constant over r^2.
constexpr double kBridsonDensity = 0.7;
constexpr int kBridsonCandidates = 30;

struct Grid {
  Index rows;
  Index cols;
  std::vector<std::uint8_t> occupied; // samples subject to the distance rule
  std::vector<std::uint8_t> calib;

  auto at(Index r, Index c) const -> std::size_t { return static_cast<std::size_t>(r * cols + c); }

  // True when no occupied point lies closer than `radius` to (r, c).
  [[nodiscard]] auto clear(Index r, Index c, double radius) const -> bool
  {
    if (radius <= 1.0) { return occupied[at(r, c)] == 0; }
    auto const reach = static_cast<Index>(std::ceil(radius));
    double const r2 = radius * radius - kDistanceSlack;
    for (Index dr = -reach; dr <= reach; ++dr) {
      Index const rr = r + dr;
      if (rr < 0 || rr >= rows) { continue; }
      for (Index dc = -reach; dc <= reach; ++dc) {
        Index const cc = c + dc;
        if (cc < 0 || cc >= cols) { continue; }
        if (occupied[at(rr, cc)] && static_cast<double>(dr * dr + dc * dc) < r2) { return false; }
      }
    }
    return true;
  }
};

auto make_calibration(Index rows, Index cols, int radius) -> std::vector<std::uint8_t>
{
  std::vector<std::uint8_t> calib(static_cast<std::size_t>(rows * cols), 0);
  if (radius <= 0) { return calib; }
  Index const r0 = rows / 2;
  Index const c0 = cols / 2;
  for (Index r = std::max<Index>(0, r0 - radius); r <= std::min<Index>(rows - 1, r0 + radius); ++r) {
    for (Index c = std::max<Index>(0, c0 - radius); c <= std::min<Index>(cols - 1, c0 + radius); ++c) {
      calib[static_cast<std::size_t>(r * cols + c)] = 1;
    }
  }
  return calib;
}

void validate(PoissonDiskArgs const &a)
{
  if (a.rows <= 0 || a.cols <= 0) { throw InvalidArgument("pattern dimensions must be positive"); }
  if (!(a.target_rate > 0.0) || a.target_rate > 1.0) {
    throw InvalidArgument("target rate must lie in (0, 1]");
  }
  if (!(a.d_min >= 0.0)) { throw InvalidArgument("d_min must be nonnegative"); }
  if (a.calib_radius < 0) { throw InvalidArgument("calibration radius must be nonnegative"); }
}

// Random order of the positions outside the calibration region.
auto shuffled_free_positions(std::vector<std::uint8_t> const &calib, Rng &rng) -> std::vector<Index>
{
  std::vector<Index> free;
  for (Index i = 0; i < static_cast<Index>(calib.size()); ++i) {
    if (!calib[static_cast<std::size_t>(i)]) { free.push_back(i); }
  }
  for (std::size_t i = free.size(); i > 1; --i) {
    std::swap(free[i - 1], free[rng.below(i)]);
  }
  return free;
}

// `avoid` marks locations used by earlier echoes (complementary scheme);
// candidates landing there are re-drawn with probability kComplementaryRedraw.
auto generate(PoissonDiskArgs const &args, std::vector<std::uint8_t> const *avoid) -> SamplingPattern
{
  validate(args);
  Rng rng(args.seed);
  Index const total = args.rows * args.cols;
  auto calib = make_calibration(args.rows, args.cols, args.calib_radius);
  Index const calib_count = std::count(calib.begin(), calib.end(), std::uint8_t{1});
  auto const target_count = static_cast<Index>(std::llround(args.target_rate * static_cast<double>(total)));
  Index const needed = std::max<Index>(0, target_count - calib_count);
  Index const free_count = total - calib_count;

  auto reject_used = [&](Index idx) {
    return avoid != nullptr && (*avoid)[static_cast<std::size_t>(idx)] && rng.uniform() < kComplementaryRedraw;
  };

  Grid grid{args.rows, args.cols, std::vector<std::uint8_t>(static_cast<std::size_t>(total), 0), calib};
  Index placed = 0;

  if (args.d_min > 1.0) {
    double const bound = packing_density_bound(args.d_min);
    // Boundary rows/cols can each host at most one extra sample per cell.
    double const best_case =
      static_cast<double>(calib_count) +
      bound * static_cast<double>(free_count) + static_cast<double>(args.rows + args.cols);
    if (best_case < 0.9 * static_cast<double>(target_count)) {
      double const achievable = std::min(1.0, best_case / static_cast<double>(total));
      throw InfeasiblePattern("sampling rate " + std::to_string(args.target_rate) +
                                " is infeasible for d_min = " + std::to_string(args.d_min) +
                                "; achievable rate is at most " + std::to_string(achievable),
                              achievable);
    }

    double const free_rate = static_cast<double>(needed) / static_cast<double>(std::max<Index>(1, free_count));
    double const radius =
      free_rate > 0.0 ? std::max(args.d_min, std::sqrt(kBridsonDensity / free_rate)) : args.d_min;

    // Bridson dart throwing with annulus candidates at the working radius.
    std::vector<Index> active;
    if (needed > 0) {
      auto const order = shuffled_free_positions(calib, rng);
      for (Index const start : order) {
        if (grid.clear(start / args.cols, start % args.cols, radius) && !reject_used(start)) {
          grid.occupied[static_cast<std::size_t>(start)] = 1;
          active.push_back(start);
          ++placed;
          break;
        }
      }
    }
    while (!active.empty()) {
      auto const pick = static_cast<std::size_t>(rng.below(active.size()));
      Index const pr = active[pick] / args.cols;
      Index const pc = active[pick] % args.cols;
      bool found = false;
      for (int k = 0; k < kBridsonCandidates && !found; ++k) {
        double const rad = radius * (1.0 + rng.uniform());
        double const ang = 2.0 * std::numbers::pi * rng.uniform();
        auto const r = static_cast<Index>(std::lround(static_cast<double>(pr) + rad * std::sin(ang)));
        auto const c = static_cast<Index>(std::lround(static_cast<double>(pc) + rad * std::cos(ang)));
        if (r < 0 || r >= args.rows || c < 0 || c >= args.cols) { continue; }
        Index const idx = r * args.cols + c;
        if (calib[static_cast<std::size_t>(idx)] || !grid.clear(r, c, radius)) { continue; }
        if (reject_used(idx)) { continue; }
        grid.occupied[static_cast<std::size_t>(idx)] = 1;
        active.push_back(idx);
        ++placed;
        found = true;
      }
      if (!found) {
        active[pick] = active.back();
        active.pop_back();
      }
    }

    if (placed > needed) {
      // Thinning never violates the distance rule; previously used locations go first.
      std::vector<Index> pts;
      for (Index i = 0; i < total; ++i) {
        if (grid.occupied[static_cast<std::size_t>(i)]) { pts.push_back(i); }
      }
      for (std::size_t i = pts.size(); i > 1; --i) { std::swap(pts[i - 1], pts[rng.below(i)]); }
      if (avoid != nullptr) {
        std::stable_partition(pts.begin(), pts.end(),
                              [&](Index i) { return (*avoid)[static_cast<std::size_t>(i)] != 0; });
      }
      for (Index k = 0; k < placed - needed; ++k) {
        grid.occupied[static_cast<std::size_t>(pts[static_cast<std::size_t>(k)])] = 0;
      }
      placed = needed;
    }
  }

  if (placed < needed) {
    // Fill at the hard distance d_min; a second pass accepts previously used
    // locations unconditionally.
    auto const order = shuffled_free_positions(calib, rng);
    for (int pass = 0; pass < 2 && placed < needed; ++pass) {
      for (Index const idx : order) {
        if (placed >= needed) { break; }
        if (grid.occupied[static_cast<std::size_t>(idx)]) { continue; }
        if (pass == 0 && reject_used(idx)) { continue; }
        if (!grid.clear(idx / args.cols, idx % args.cols, args.d_min)) { continue; }
        grid.occupied[static_cast<std::size_t>(idx)] = 1;
        ++placed;
      }
      if (avoid == nullptr) { break; }
    }
  }

  SamplingPattern p;
  p.rows = args.rows;
  p.cols = args.cols;
  p.d_min = args.d_min;
  p.target_rate = args.target_rate;
  p.calib_radius = args.calib_radius;
  p.seed = args.seed;
  p.mask.assign(static_cast<std::size_t>(total), 0);
  for (Index i = 0; i < total; ++i) {
    p.mask[static_cast<std::size_t>(i)] = grid.occupied[static_cast<std::size_t>(i)] | calib[static_cast<std::size_t>(i)];
  }

  double const achieved = p.rate();
  if (std::abs(achieved - args.target_rate) > 0.1 * args.target_rate) {
    throw InfeasiblePattern("sampling rate " + std::to_string(args.target_rate) + " is not reachable with d_min = " +
                              std::to_string(args.d_min) + " and calibration radius " +
                              std::to_string(args.calib_radius) + "; achieved " + std::to_string(achieved),
                            achieved);
  }
  return p;
}

} // namespace

auto SamplingPattern::count() const -> Index
{
  return std::count(mask.begin(), mask.end(), std::uint8_t{1});
}

auto SamplingPattern::rate() const -> double
{
  return static_cast<double>(count()) / static_cast<double>(rows * cols);
}

auto SamplingPattern::in_calibration(Index r, Index c) const -> bool
{
  if (calib_radius <= 0) { return false; }
  return std::abs(r - rows / 2) <= calib_radius && std::abs(c - cols / 2) <= calib_radius;
}

auto SamplingPattern::as_image() const -> RealImage
{
  RealImage img(rows, cols);
  for (Index i = 0; i < rows * cols; ++i) { img[i] = mask[static_cast<std::size_t>(i)] ? 1.0 : 0.0; }
  return img;
}

auto SamplingPattern::full(Index rows, Index cols) -> SamplingPattern
{
  SamplingPattern p;
  p.rows = rows;
  p.cols = cols;
  p.mask.assign(static_cast<std::size_t>(rows * cols), 1);
  p.target_rate = 1.0;
  return p;
}

auto SamplingPattern::empty(Index rows, Index cols) -> SamplingPattern
{
  SamplingPattern p;
  p.rows = rows;
  p.cols = cols;
  p.mask.assign(static_cast<std::size_t>(rows * cols), 0);
  p.target_rate = 0.0;
  return p;
}

auto EchoPatternSet::union_count() const -> Index
{
  if (patterns.empty()) { return 0; }
  std::vector<std::uint8_t> u(patterns.front().mask.size(), 0);
  for (auto const &p : patterns) {
    for (std::size_t i = 0; i < u.size(); ++i) { u[i] |= p.mask[i]; }
  }
  return std::count(u.begin(), u.end(), std::uint8_t{1});
}

auto packing_density_bound(double d_min) -> double
{
  if (d_min <= 1.0) { return 1.0; }
  // An a x b block whose diagonal is shorter than d_min holds at most one
  // sample, so the density is at most 1 / (a b).
  double const d2 = d_min * d_min - kDistanceSlack;
  auto const reach = static_cast<Index>(std::ceil(d_min)) + 1;
  Index best = 1;
  for (Index a = 1; a <= reach; ++a) {
    for (Index b = 1; b <= reach; ++b) {
      if (static_cast<double>((a - 1) * (a - 1) + (b - 1) * (b - 1)) < d2) { best = std::max(best, a * b); }
    }
  }
  return 1.0 / static_cast<double>(best);
}

auto poisson_disk(PoissonDiskArgs const &args) -> SamplingPattern
{
  return generate(args, nullptr);
}

auto feasible_d_min(PoissonDiskArgs const &args) -> double
{
  std::vector<double> ladder{args.d_min};
  for (double d : {std::numbers::sqrt2, 1.0}) {
    if (d < args.d_min) { ladder.push_back(d); }
  }
  for (double d : ladder) {
    auto trial = args;
    trial.d_min = d;
    try {
      (void)poisson_disk(trial);
      return d;
    } catch (InfeasiblePattern const &) {
    }
  }
  throw InfeasiblePattern("no feasible d_min for rate " + std::to_string(args.target_rate), 0.0);
}

auto make_echo_patterns(Index echoes, PatternScheme scheme, PoissonDiskArgs const &args) -> EchoPatternSet
{
  if (echoes < 1) { throw InvalidArgument("at least one echo pattern is required"); }
  EchoPatternSet set;
  set.scheme = scheme;
  auto const first = poisson_disk(args);
  set.patterns.push_back(first);
  if (scheme == PatternScheme::fixed) {
    for (Index e = 1; e < echoes; ++e) { set.patterns.push_back(first); }
    return set;
  }
  std::vector<std::uint8_t> used = first.mask;
  for (Index e = 1; e < echoes; ++e) {
    auto echo_args = args;
    echo_args.seed = mix_seed(args.seed, static_cast<std::uint64_t>(e));
    auto p = generate(echo_args, &used);
    p.seed = echo_args.seed;
    for (std::size_t i = 0; i < used.size(); ++i) { used[i] |= p.mask[i]; }
    set.patterns.push_back(std::move(p));
  }
  return set;
}

auto default_calib_radius(Index rows, Index cols) -> int
{
  auto const n = static_cast<double>(std::min(rows, cols));
  return std::max(1, static_cast<int>(std::lround(12.0 * n / 320.0)));
}

} // namespace relaxmap
