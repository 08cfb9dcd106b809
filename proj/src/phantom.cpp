#include "relaxmap/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "relaxmap/error.hpp"
#include "relaxmap/fourier.hpp"
#include "relaxmap/rng.hpp"

namespace relaxmap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kR2Lo = 0.01;
constexpr double kR2Hi = 0.2;

auto wrap_angle(double a) -> double
{
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) { w += kTwoPi; }
  if (w >= kTwoPi) { w = 0.0; }
  return w;
}

// Normalised coordinates in [-1, 1] at pixel centres.
struct Coords {
  Index rows;
  Index cols;
  [[nodiscard]] auto u(Index c) const -> double { return (static_cast<double>(c) + 0.5) / (0.5 * static_cast<double>(cols)) - 1.0; }
  [[nodiscard]] auto v(Index r) const -> double { return (static_cast<double>(r) + 0.5) / (0.5 * static_cast<double>(rows)) - 1.0; }
};

struct Ellipse {
  double cu, cv, au, av, angle; // centre, semi-axes, rotation (radians)
  double x0, r2;

  [[nodiscard]] auto contains(double u, double v) const -> bool
  {
    double const du = u - cu;
    double const dv = v - cv;
    double const cs = std::cos(angle);
    double const sn = std::sin(angle);
    double const pu = (cs * du + sn * dv) / au;
    double const pv = (-sn * du + cs * dv) / av;
    return pu * pu + pv * pv <= 1.0;
  }
};

auto jitter(Rng &rng, double value, double rel) -> double { return value * (1.0 + rng.uniform(-rel, rel)); }

void paint_ellipses(Phantom &p, Coords const &g, std::vector<Ellipse> const &shapes)
{
  for (Index r = 0; r < g.rows; ++r) {
    for (Index c = 0; c < g.cols; ++c) {
      for (std::size_t k = 0; k < shapes.size(); ++k) {
        if (!shapes[k].contains(g.u(c), g.v(r))) { continue; }
        if (k == 0) { p.support(r, c) = 1.0; }
        p.x0(r, c) = shapes[k].x0;
        p.r2star(r, c) = shapes[k].r2;
      }
    }
  }
}

void shepp_like(Phantom &p, Coords const &g, Rng &rng)
{
  std::vector<Ellipse> shapes{
    {0.0, 0.0, 0.69, 0.92, 0.0, 0.8, 0.03},
    {0.0, -0.0184, 0.6624, 0.874, 0.0, 0.6, 0.045},
    {0.22, 0.0, 0.11, 0.31, -0.314, 0.95, 0.015},
    {-0.22, 0.0, 0.16, 0.41, 0.314, 0.9, 0.02},
    {0.0, 0.35, 0.21, 0.25, 0.0, 0.5, 0.08},
    {0.0, 0.1, 0.06, 0.06, 0.0, 0.4, 0.15},
    {0.0, -0.1, 0.06, 0.06, 0.0, 0.45, 0.12},
    {-0.08, -0.605, 0.06, 0.035, 0.0, 0.3, 0.2},
    {0.06, -0.605, 0.035, 0.06, 0.0, 0.35, 0.17},
  };
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    auto &e = shapes[k];
    if (k >= 2) {
      e.cu += rng.uniform(-0.03, 0.03);
      e.cv += rng.uniform(-0.03, 0.03);
      e.au = jitter(rng, e.au, 0.1);
      e.av = jitter(rng, e.av, 0.1);
    }
    e.x0 = std::clamp(jitter(rng, e.x0, 0.1), 0.1, 1.0);
    e.r2 = std::clamp(jitter(rng, e.r2, 0.1), kR2Lo, kR2Hi);
  }
  paint_ellipses(p, g, shapes);

  // mild smooth shading keeps x0 piecewise-smooth rather than piecewise-constant
  double const a = rng.uniform(-0.1, 0.1);
  double const b = rng.uniform(-0.1, 0.1);
  for (Index r = 0; r < g.rows; ++r) {
    for (Index c = 0; c < g.cols; ++c) {
      if (p.support(r, c) > 0.0) { p.x0(r, c) = std::clamp(p.x0(r, c) * (1.0 + a * g.u(c) + b * g.v(r)), 0.05, 1.0); }
    }
  }
}

void blocks(Phantom &p, Coords const &g, Rng &rng)
{
  double const half = 0.75;
  double const base_x0 = jitter(rng, 0.7, 0.05);
  double const base_r2 = jitter(rng, 0.03, 0.1);
  for (Index r = 0; r < g.rows; ++r) {
    for (Index c = 0; c < g.cols; ++c) {
      if (std::abs(g.u(c)) <= half && std::abs(g.v(r)) <= half) {
        p.support(r, c) = 1.0;
        p.x0(r, c) = base_x0;
        p.r2star(r, c) = base_r2;
      }
    }
  }
  struct Block {
    double cu, cv, x0, r2;
  };
  std::array<Block, 4> const blocks{{
    {-0.35, -0.35, 0.5, 0.06},
    {0.35, -0.35, 0.9, 0.1},
    {-0.35, 0.35, 0.6, 0.15},
    {0.35, 0.35, 0.8, 0.2},
  }};
  for (auto const &b : blocks) {
    double const cu = b.cu + rng.uniform(-0.05, 0.05);
    double const cv = b.cv + rng.uniform(-0.05, 0.05);
    double const hw = rng.uniform(0.15, 0.25);
    double const x0 = std::clamp(jitter(rng, b.x0, 0.05), 0.1, 1.0);
    double const r2 = std::clamp(jitter(rng, b.r2, 0.05), kR2Lo, kR2Hi);
    for (Index r = 0; r < g.rows; ++r) {
      for (Index c = 0; c < g.cols; ++c) {
        if (std::abs(g.u(c) - cu) <= hw && std::abs(g.v(r) - cv) <= hw) {
          p.x0(r, c) = x0;
          p.r2star(r, c) = r2;
        }
      }
    }
  }
}

// Sum of random Gaussian bumps, rescaled to [lo, hi] over the support.
auto smooth_field(Coords const &g, RealImage const &support, Rng &rng, double lo, double hi) -> RealImage
{
  RealImage f(g.rows, g.cols);
  for (int k = 0; k < 6; ++k) {
    double const cu = rng.uniform(-0.8, 0.8);
    double const cv = rng.uniform(-0.8, 0.8);
    double const w = rng.uniform(0.2, 0.5);
    double const a = rng.uniform(-1.0, 1.0);
    for (Index r = 0; r < g.rows; ++r) {
      for (Index c = 0; c < g.cols; ++c) {
        double const du = g.u(c) - cu;
        double const dv = g.v(r) - cv;
        f(r, c) += a * std::exp(-(du * du + dv * dv) / (2.0 * w * w));
      }
    }
  }
  double fmin = 1e300;
  double fmax = -1e300;
  for (Index i = 0; i < f.size(); ++i) {
    if (support[i] > 0.0) {
      fmin = std::min(fmin, f[i]);
      fmax = std::max(fmax, f[i]);
    }
  }
  double const span = fmax > fmin ? fmax - fmin : 1.0;
  for (Index i = 0; i < f.size(); ++i) { f[i] = support[i] > 0.0 ? lo + (hi - lo) * (f[i] - fmin) / span : 0.0; }
  return f;
}

void random_smooth(Phantom &p, Coords const &g, Rng &rng)
{
  double const au = rng.uniform(0.75, 0.85);
  double const av = rng.uniform(0.8, 0.9);
  for (Index r = 0; r < g.rows; ++r) {
    for (Index c = 0; c < g.cols; ++c) {
      double const pu = g.u(c) / au;
      double const pv = g.v(r) / av;
      if (pu * pu + pv * pv <= 1.0) { p.support(r, c) = 1.0; }
    }
  }
  p.x0 = smooth_field(g, p.support, rng, 0.3, 1.0);
  p.r2star = smooth_field(g, p.support, rng, kR2Lo, kR2Hi);
}

} // namespace

void KSpaceData::validate() const
{
  if (echoes < 1 || coils < 1) { throw DimensionError("k-space data needs at least one echo and one coil"); }
  if (static_cast<Index>(planes.size()) != echoes * coils) {
    throw DimensionError("k-space plane count does not equal echoes x coils");
  }
  if (patterns.size() != echoes) { throw DimensionError("k-space data needs one sampling pattern per echo"); }
  if (times.size() != echoes) { throw DimensionError("k-space data needs one echo time per echo"); }
  for (auto const &p : planes) { require_same_shape(p, planes.front(), "k-space planes"); }
  for (auto const &pat : patterns.patterns) {
    if (pat.rows != rows() || pat.cols != cols()) { throw DimensionError("sampling pattern and k-space dimensions differ"); }
  }
}

auto preset_name(PhantomPreset p) -> std::string
{
  switch (p) {
    case PhantomPreset::shepp_like: return "shepp-like";
    case PhantomPreset::blocks: return "blocks";
    case PhantomPreset::random_smooth: return "random-smooth";
  }
  return "?";
}

auto parse_preset(std::string const &name) -> PhantomPreset
{
  if (name == "shepp-like") { return PhantomPreset::shepp_like; }
  if (name == "blocks") { return PhantomPreset::blocks; }
  if (name == "random-smooth") { return PhantomPreset::random_smooth; }
  throw InvalidArgument("unknown phantom preset '" + name + "' (expected shepp-like, blocks or random-smooth)");
}

auto decay_images(Phantom const &phantom, EchoTimes const &times) -> RealEchoSet
{
  require_same_shape(phantom.x0, phantom.r2star, "decay_images");
  RealEchoSet out{{}, times};
  for (Index i = 0; i < times.size(); ++i) {
    RealImage x(phantom.x0.rows(), phantom.x0.cols());
    for (Index p = 0; p < x.size(); ++p) { x[p] = phantom.x0[p] * std::exp(-times[i] * phantom.r2star[p]); }
    out.echoes.push_back(std::move(x));
  }
  return out;
}

auto echo_images(Phantom const &phantom, EchoTimes const &times) -> ComplexEchoSet
{
  if (phantom.theta.size() != times.size()) { throw DimensionError("phantom phase maps do not match the echo count"); }
  auto const mags = decay_images(phantom, times);
  ComplexEchoSet out{{}, times};
  for (Index i = 0; i < times.size(); ++i) {
    require_same_shape(mags[i], phantom.theta[i], "echo_images");
    ComplexImage u(mags[i].rows(), mags[i].cols());
    for (Index p = 0; p < u.size(); ++p) { u[p] = std::polar(mags[i][p], phantom.theta[i][p]); }
    out.echoes.push_back(std::move(u));
  }
  return out;
}

auto simulate_kspace(Phantom const &phantom, AcquisitionSpec const &spec, std::uint64_t seed) -> KSpaceData
{
  spec.coils.validate();
  if (spec.patterns.size() != spec.times.size()) { throw DimensionError("need one sampling pattern per echo"); }
  if (!(spec.noise_sigma >= 0.0)) { throw InvalidArgument("noise sigma must be nonnegative"); }
  if (spec.coils.rows() != phantom.x0.rows() || spec.coils.cols() != phantom.x0.cols()) {
    throw DimensionError("coil maps and phantom dimensions differ");
  }
  auto const u = echo_images(phantom, spec.times);

  KSpaceData data;
  data.echoes = spec.times.size();
  data.coils = spec.coils.size();
  data.patterns = spec.patterns;
  data.times = spec.times;
  double const component_sigma = spec.noise_sigma / std::sqrt(2.0);
  for (Index i = 0; i < data.echoes; ++i) {
    auto const &pattern = spec.patterns[i];
    for (Index j = 0; j < data.coils; ++j) {
      SamplingOperator op(pattern, spec.coils[j]);
      auto y = op.forward(u[i]);
      if (spec.noise_sigma > 0.0) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i * data.coils + j)));
        for (Index r = 0; r < y.rows(); ++r) {
          for (Index c = 0; c < y.cols(); ++c) {
            if (!pattern(r, c)) { continue; }
            double const re = rng.normal();
            double const im = rng.normal();
            y(r, c) += Complex(component_sigma * re, component_sigma * im);
          }
        }
      }
      data.planes.push_back(std::move(y));
    }
  }
  return data;
}

auto synth_coils(Index rows, Index cols, Index coils) -> CoilSet
{
  if (coils < 1) { throw InvalidArgument("coil count must be at least 1"); }
  if (rows <= 0 || cols <= 0) { throw DimensionError("coil map dimensions must be positive"); }
  Coords const g{rows, cols};
  CoilSet set;
  for (Index j = 0; j < coils; ++j) {
    double cu = 0.0;
    double cv = 0.0;
    double width = 1.5;
    double ramp = 0.0;
    double phi = 0.0;
    if (coils > 1) {
      phi = kTwoPi * static_cast<double>(j) / static_cast<double>(coils);
      cu = std::cos(phi);
      cv = std::sin(phi);
      width = 1.0;
      ramp = 0.25 * std::numbers::pi;
    }
    ComplexImage s(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) {
        double const du = g.u(c) - cu;
        double const dv = g.v(r) - cv;
        double const mag = std::exp(-(du * du + dv * dv) / (2.0 * width * width));
        double const phase = phi + ramp * (g.u(c) * std::cos(phi) + g.v(r) * std::sin(phi));
        s(r, c) = std::polar(mag, phase);
      }
    }
    set.maps.push_back(std::move(s));
  }
  auto const rss = set.rss();
  double const peak = *std::max_element(rss.begin(), rss.end());
  for (auto &m : set.maps) {
    for (auto &v : m) { v /= peak; }
  }
  return set;
}

auto truncate_echoes(KSpaceData const &data, Index keep) -> KSpaceData
{
  data.validate();
  auto times = data.times.first(keep);
  KSpaceData out;
  out.echoes = keep;
  out.coils = data.coils;
  out.planes.assign(data.planes.begin(), data.planes.begin() + keep * data.coils);
  out.patterns.scheme = data.patterns.scheme;
  out.patterns.patterns.assign(data.patterns.patterns.begin(), data.patterns.patterns.begin() + keep);
  out.times = std::move(times);
  return out;
}

auto make_phantom(Index rows, Index cols, PhantomPreset preset, std::uint64_t seed, EchoTimes const &phase_times)
  -> Phantom
{
  if (rows <= 0 || cols <= 0) { throw DimensionError("phantom dimensions must be positive"); }
  Coords const g{rows, cols};
  Rng rng(seed);
  Phantom p{RealImage(rows, cols), RealImage(rows, cols), {{}, phase_times}, RealImage(rows, cols)};
  switch (preset) {
    case PhantomPreset::shepp_like: shepp_like(p, g, rng); break;
    case PhantomPreset::blocks: blocks(p, g, rng); break;
    case PhantomPreset::random_smooth: random_smooth(p, g, rng); break;
  }

  // phase: offset and spatial tilt plus a field-like term growing with t
  double const phi0 = rng.uniform(0.0, kTwoPi);
  double const a = rng.uniform(-1.0, 1.0);
  double const b = rng.uniform(-1.0, 1.0);
  double const w0 = rng.uniform(-0.05, 0.05);
  double const wu = rng.uniform(-0.03, 0.03);
  double const wv = rng.uniform(-0.03, 0.03);
  for (Index i = 0; i < phase_times.size(); ++i) {
    double const t = phase_times[i];
    RealImage th(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) {
        double const u = g.u(c);
        double const v = g.v(r);
        th(r, c) = wrap_angle(phi0 + a * u + b * v + t * (w0 + wu * u + wv * v));
      }
    }
    p.theta.echoes.push_back(std::move(th));
  }
  return p;
}

} // namespace relaxmap
