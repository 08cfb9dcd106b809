#include "relaxmap/image.hpp"
#include "relaxmap/metrics.hpp"
#include "relaxmap/types.hpp"

#include <algorithm>
#include <numeric>

namespace relaxmap {

auto all_finite(RealImage const &img) -> bool
{
  return std::all_of(img.begin(), img.end(), [](double v) { return std::isfinite(v); });
}

auto all_finite(ComplexImage const &img) -> bool
{
  return std::all_of(img.begin(), img.end(),
                     [](Complex v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

auto real_part(ComplexImage const &z) -> RealImage
{
  RealImage out(z.rows(), z.cols());
  for (Index i = 0; i < z.size(); ++i) { out[i] = z[i].real(); }
  return out;
}

auto magnitude(ComplexImage const &z) -> RealImage
{
  RealImage out(z.rows(), z.cols());
  for (Index i = 0; i < z.size(); ++i) { out[i] = std::abs(z[i]); }
  return out;
}

auto to_complex(RealImage const &x) -> ComplexImage
{
  ComplexImage out(x.rows(), x.cols());
  for (Index i = 0; i < x.size(); ++i) { out[i] = x[i]; }
  return out;
}

auto unit_phasor(RealImage const &theta) -> ComplexImage
{
  ComplexImage out(theta.rows(), theta.cols());
  for (Index i = 0; i < theta.size(); ++i) { out[i] = std::polar(1.0, theta[i]); }
  return out;
}

auto norm2(RealImage const &x) -> double
{
  return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
}

auto norm2(ComplexImage const &x) -> double
{
  double s = 0.0;
  for (auto const &v : x) { s += std::norm(v); }
  return std::sqrt(s);
}

auto dot(RealImage const &a, RealImage const &b) -> double
{
  require_same_shape(a, b, "dot");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

auto dot(ComplexImage const &a, ComplexImage const &b) -> Complex
{
  require_same_shape(a, b, "dot");
  Complex s{};
  for (Index i = 0; i < a.size(); ++i) { s += std::conj(a[i]) * b[i]; }
  return s;
}

// ---------------------------------------------------------------------------

EchoTimes::EchoTimes(std::vector<double> times)
  : times_{std::move(times)}
{
  if (times_.empty()) { throw InvalidArgument("at least one echo time is required"); }
  if (!(times_.front() > 0.0)) { throw InvalidArgument("first echo time must be positive"); }
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) { throw InvalidArgument("echo times must be strictly increasing"); }
  }
}

auto EchoTimes::uniform(Index count, double te1, double spacing) -> EchoTimes
{
  std::vector<double> t;
  for (Index i = 0; i < count; ++i) { t.push_back(te1 + static_cast<double>(i) * spacing); }
  return EchoTimes(std::move(t));
}

void EchoTimes::require_fittable() const
{
  if (size() < 2) { throw InvalidArgument("the decay fit needs at least two echoes"); }
}

auto EchoTimes::first(Index keep) const -> EchoTimes
{
  if (keep < 2) { throw InvalidArgument("at least two echoes must be kept"); }
  if (keep > size()) { throw InvalidArgument("cannot keep more echoes than acquired"); }
  return EchoTimes(std::vector<double>(times_.begin(), times_.begin() + keep));
}

auto CoilSet::rss() const -> RealImage
{
  validate();
  RealImage out(rows(), cols());
  for (auto const &m : maps) {
    for (Index i = 0; i < m.size(); ++i) { out[i] += std::norm(m[i]); }
  }
  for (auto &v : out) { v = std::sqrt(v); }
  return out;
}

void CoilSet::validate() const
{
  if (maps.empty()) { throw InvalidArgument("coil set is empty"); }
  for (auto const &m : maps) { require_same_shape(m, maps.front(), "coil set"); }
}

void ReconParams::validate() const
{
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0 || lambda < 0 || rho < 0) {
    throw InvalidArgument("regularization weights must be nonnegative");
  }
  if (outer_iters < 1 || inner_iters < 1 || stage_iters < 1 || prox_iters < 1) {
    throw InvalidArgument("iteration budgets must be positive");
  }
  if (!(tol_primal > 0) || !(tol_change > 0)) { throw InvalidArgument("tolerances must be positive"); }
  if (!(e_min > 0)) { throw InvalidArgument("e_min must be positive"); }
  if (e_max != 0.0 && !(e_max > e_min)) { throw InvalidArgument("e_max must exceed e_min"); }
  if (!(r_max > 0)) { throw InvalidArgument("r_max must be positive"); }
  if (wavelet_levels < 1) { throw InvalidArgument("wavelet_levels must be positive"); }
}

// ---------------------------------------------------------------------------

auto masked_relative_error(RealImage const &truth, RealImage const &estimate, RealImage const &mask)
  -> double
{
  require_same_shape(truth, estimate, "masked_relative_error");
  require_same_shape(truth, mask, "masked_relative_error");
  double sum = 0.0;
  Index n = 0;
  for (Index i = 0; i < truth.size(); ++i) {
    if (mask[i] != 0.0 && mask[i] != 1.0) { throw InvalidArgument("mask entries must be 0 or 1"); }
    if (mask[i] == 0.0) { continue; }
    if (truth[i] == 0.0) { throw InvalidArgument("truth is zero on a masked pixel"); }
    sum += std::abs(truth[i] - estimate[i]) / std::abs(truth[i]);
    ++n;
  }
  if (n == 0) { throw InvalidArgument("mask selects no pixels"); }
  return sum / static_cast<double>(n);
}

auto image_linf_diff(RealImage const &a, RealImage const &b) -> double
{
  require_same_shape(a, b, "image_linf_diff");
  double m = 0.0;
  for (Index i = 0; i < a.size(); ++i) { m = std::max(m, std::abs(a[i] - b[i])); }
  return m;
}

auto image_linf_diff(ComplexImage const &a, ComplexImage const &b) -> double
{
  require_same_shape(a, b, "image_linf_diff");
  double m = 0.0;
  for (Index i = 0; i < a.size(); ++i) { m = std::max(m, std::abs(a[i] - b[i])); }
  return m;
}

auto mask_count(RealImage const &mask) -> Index
{
  return std::count_if(mask.begin(), mask.end(), [](double v) { return v != 0.0; });
}

} // namespace relaxmap
