#include "relaxmap/wavelet.hpp"

#include <array>
#include <cmath>

namespace relaxmap {

namespace {

// Extremal-phase Daubechies scaling filters, derived by spectral factorisation
// at 60 digits (tools/scripts/daubechies_filters.py).
std::array<std::vector<double>, 8> const kFilters{{
  {0.7071067811865475244, 0.7071067811865475244},
  {0.48296291314453414337, 0.83651630373780790558, 0.22414386804201338103, -0.12940952255126038117},
  {0.332670552950082616, 0.80689150931109257649, 0.4598775021184915701, -0.1350110200102545887,
   -0.085441273882026661693, 0.035226291885709536603},
  {0.23037781330889650086, 0.71484657055291564709, 0.63088076792985890788, -0.027983769416859854211,
   -0.18703481171909308408, 0.030841381835560763627, 0.032883011666885199735, -0.010597401785069032105},
  {0.16010239797419291448, 0.60382926979718967054, 0.72430852843777292773, 0.13842814590132073151,
   -0.24229488706638203186, -0.032244869584638374648, 0.077571493840045713523, -0.0062414902127982742742,
   -0.012580751999081999469, 0.003335725285473771278},
  {0.11154074335010946362, 0.49462389039845308568, 0.75113390802109535068, 0.31525035170919762909,
   -0.22626469396543982008, -0.12976686756726193556, 0.097501605587323049102, 0.027522865530305728626,
   -0.031582039317486029565, 0.00055384220116149613925, 0.0047772575109455106396, -0.0010773010853084795649},
  {0.07785205408500917902, 0.39653931948191730654, 0.72913209084623511992, 0.46978228740519312247,
   -0.14390600392856497541, -0.22403618499387498264, 0.071309219266830264751, 0.080612609151083071913,
   -0.03802993693501441358, -0.016574541630666880654, 0.012550998556099840613, 0.00042957797292136652113,
   -0.0018016407040474909153, 0.00035371379997452024845},
  {0.054415842243104009955, 0.31287159091429997066, 0.67563073629728980681, 0.58535468365420671277,
   -0.015829105256349305667, -0.28401554296154692652, 0.00047248457391328277036, 0.12874742662047845886,
   -0.01736930100180754617, -0.044088253930794751507, 0.013981027917398281649, 0.0087460940474057767164,
   -0.0048703529934515743104, -0.0003917403733769470463, 0.00067544940645056936637,
   -0.00011747678412476953373},
}};

struct Filters {
  std::span<double const> lo;
  std::vector<double> hi;
};

auto make_filters(int order) -> Filters
{
  auto lo = daubechies_filter(order);
  std::vector<double> hi(lo.size());
  auto const n = lo.size();
  for (std::size_t m = 0; m < n; ++m) { hi[m] = (m % 2 == 0 ? 1.0 : -1.0) * lo[n - 1 - m]; }
  return {lo, std::move(hi)};
}

// Periodised one-level analysis of `in` (length n, even) into approx|detail.
void analyse(Filters const &f, double const *in, double *out, Index n)
{
  Index const half = n / 2;
  auto const taps = static_cast<Index>(f.lo.size());
  for (Index k = 0; k < half; ++k) {
    double a = 0.0;
    double d = 0.0;
    for (Index m = 0; m < taps; ++m) {
      Index idx = 2 * k + m;
      if (idx >= n) { idx %= n; }
      a += f.lo[static_cast<std::size_t>(m)] * in[idx];
      d += f.hi[static_cast<std::size_t>(m)] * in[idx];
    }
    out[k] = a;
    out[half + k] = d;
  }
}

// Transpose of analyse.
void synthesise(Filters const &f, double const *in, double *out, Index n)
{
  Index const half = n / 2;
  auto const taps = static_cast<Index>(f.lo.size());
  for (Index i = 0; i < n; ++i) { out[i] = 0.0; }
  for (Index k = 0; k < half; ++k) {
    double const a = in[k];
    double const d = in[half + k];
    for (Index m = 0; m < taps; ++m) {
      Index idx = 2 * k + m;
      if (idx >= n) { idx %= n; }
      out[idx] += f.lo[static_cast<std::size_t>(m)] * a + f.hi[static_cast<std::size_t>(m)] * d;
    }
  }
}

// In-place Mallat pyramid on a pr x pc row-major buffer.
void dwt2(Filters const &f, std::vector<double> &buf, Index pr, Index pc, int levels)
{
  std::vector<double> line(static_cast<std::size_t>(std::max(pr, pc)));
  std::vector<double> tmp(line.size());
  for (int l = 0; l < levels; ++l) {
    Index const br = pr >> l;
    Index const bc = pc >> l;
    for (Index r = 0; r < br; ++r) {
      double *row = buf.data() + r * pc;
      analyse(f, row, tmp.data(), bc);
      std::copy_n(tmp.data(), bc, row);
    }
    for (Index c = 0; c < bc; ++c) {
      for (Index r = 0; r < br; ++r) { line[static_cast<std::size_t>(r)] = buf[static_cast<std::size_t>(r * pc + c)]; }
      analyse(f, line.data(), tmp.data(), br);
      for (Index r = 0; r < br; ++r) { buf[static_cast<std::size_t>(r * pc + c)] = tmp[static_cast<std::size_t>(r)]; }
    }
  }
}

void idwt2(Filters const &f, std::vector<double> &buf, Index pr, Index pc, int levels)
{
  std::vector<double> line(static_cast<std::size_t>(std::max(pr, pc)));
  std::vector<double> tmp(line.size());
  for (int l = levels - 1; l >= 0; --l) {
    Index const br = pr >> l;
    Index const bc = pc >> l;
    for (Index c = 0; c < bc; ++c) {
      for (Index r = 0; r < br; ++r) { line[static_cast<std::size_t>(r)] = buf[static_cast<std::size_t>(r * pc + c)]; }
      synthesise(f, line.data(), tmp.data(), br);
      for (Index r = 0; r < br; ++r) { buf[static_cast<std::size_t>(r * pc + c)] = tmp[static_cast<std::size_t>(r)]; }
    }
    for (Index r = 0; r < br; ++r) {
      double *row = buf.data() + r * pc;
      synthesise(f, row, tmp.data(), bc);
      std::copy_n(tmp.data(), bc, row);
    }
  }
}

// Visit the pyramid blocks in coarse-to-fine order as (row0, col0, rows, cols).
template <typename Fn>
void for_each_block(Index pr, Index pc, int levels, Fn &&fn)
{
  fn(Index{0}, Index{0}, pr >> levels, pc >> levels);
  for (int l = levels; l >= 1; --l) {
    Index const hr = pr >> l;
    Index const hc = pc >> l;
    fn(Index{0}, hc, hr, hc);
    fn(hr, Index{0}, hr, hc);
    fn(hr, hc, hr, hc);
  }
}

} // namespace

auto daubechies_filter(int order) -> std::span<double const>
{
  if (order < 1 || order > 8) { throw InvalidArgument("Daubechies order must be in [1, 8]"); }
  return kFilters[static_cast<std::size_t>(order - 1)];
}

WaveletFrame::WaveletFrame(Index rows, Index cols, int levels)
  : WaveletFrame(rows, cols, levels, {1, 2, 3, 4, 5, 6, 7, 8})
{
}

WaveletFrame::WaveletFrame(Index rows, Index cols, int levels, std::vector<int> orders)
  : rows_{rows}, cols_{cols}, levels_{levels}, orders_{std::move(orders)}
{
  if (rows <= 0 || cols <= 0) { throw DimensionError("wavelet frame dimensions must be positive"); }
  if (levels < 1 || levels > 16) { throw InvalidArgument("wavelet levels must be in [1, 16]"); }
  if (orders_.empty()) { throw InvalidArgument("wavelet frame needs at least one member"); }
  for (int o : orders_) { (void)daubechies_filter(o); }
  Index const block = Index{1} << levels;
  prows_ = (rows + block - 1) / block * block;
  pcols_ = (cols + block - 1) / block * block;
  scale_ = 1.0 / std::sqrt(static_cast<double>(orders_.size()));
}

auto WaveletFrame::forward(RealImage const &x) const -> std::vector<double>
{
  if (x.rows() != rows_ || x.cols() != cols_) { throw DimensionError("wavelet frame: image dimension mismatch"); }
  std::vector<double> coeffs(static_cast<std::size_t>(coefficient_count()));
  std::vector<double> buf(static_cast<std::size_t>(prows_ * pcols_));
  for (std::size_t m = 0; m < orders_.size(); ++m) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (Index r = 0; r < rows_; ++r) {
      for (Index c = 0; c < cols_; ++c) { buf[static_cast<std::size_t>(r * pcols_ + c)] = x(r, c); }
    }
    auto const filters = make_filters(orders_[m]);
    dwt2(filters, buf, prows_, pcols_, levels_);
    double *out = coeffs.data() + member_offset(m);
    for_each_block(prows_, pcols_, levels_, [&](Index r0, Index c0, Index nr, Index nc) {
      for (Index r = 0; r < nr; ++r) {
        for (Index c = 0; c < nc; ++c) { *out++ = scale_ * buf[static_cast<std::size_t>((r0 + r) * pcols_ + c0 + c)]; }
      }
    });
  }
  return coeffs;
}

auto WaveletFrame::adjoint(std::span<double const> coeffs) const -> RealImage
{
  if (static_cast<Index>(coeffs.size()) != coefficient_count()) {
    throw DimensionError("wavelet frame: coefficient vector has length " + std::to_string(coeffs.size()) +
                         ", expected " + std::to_string(coefficient_count()));
  }
  RealImage x(rows_, cols_);
  std::vector<double> buf(static_cast<std::size_t>(prows_ * pcols_));
  for (std::size_t m = 0; m < orders_.size(); ++m) {
    double const *in = coeffs.data() + member_offset(m);
    for_each_block(prows_, pcols_, levels_, [&](Index r0, Index c0, Index nr, Index nc) {
      for (Index r = 0; r < nr; ++r) {
        for (Index c = 0; c < nc; ++c) { buf[static_cast<std::size_t>((r0 + r) * pcols_ + c0 + c)] = *in++; }
      }
    });
    auto const filters = make_filters(orders_[m]);
    idwt2(filters, buf, prows_, pcols_, levels_);
    for (Index r = 0; r < rows_; ++r) {
      for (Index c = 0; c < cols_; ++c) { x(r, c) += scale_ * buf[static_cast<std::size_t>(r * pcols_ + c)]; }
    }
  }
  return x;
}

auto soft_threshold(std::span<double const> c, double tau) -> std::vector<double>
{
  std::vector<double> out(c.begin(), c.end());
  soft_threshold_inplace(out, tau);
  return out;
}

void soft_threshold_inplace(std::span<double> c, double tau)
{
  if (!(tau >= 0.0)) { throw InvalidArgument("soft threshold requires tau >= 0"); }
  for (auto &v : c) {
    double const a = std::abs(v) - tau;
    v = a > 0.0 ? std::copysign(a, v) : 0.0;
  }
}

auto l1_norm(std::span<double const> c) -> double
{
  double s = 0.0;
  for (double v : c) { s += std::abs(v); }
  return s;
}

} // namespace relaxmap
