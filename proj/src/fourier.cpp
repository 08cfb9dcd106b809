#include "relaxmap/fourier.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace relaxmap {

namespace {

// FFTW planning is not thread-safe, execution is. Plans are created once per
// (rows, cols, sign) and executed on caller-owned buffers.
auto plan_for(Index rows, Index cols, int sign) -> fftw_plan
{
  static std::mutex mutex;
  static std::map<std::tuple<Index, Index, int>, fftw_plan> plans;
  std::lock_guard lock(mutex);
  auto key = std::make_tuple(rows, cols, sign);
  if (auto it = plans.find(key); it != plans.end()) { return it->second; }
  std::vector<Complex> scratch(static_cast<std::size_t>(rows * cols));
  auto *buf = reinterpret_cast<fftw_complex *>(scratch.data());
  fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf, sign,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans.emplace(key, plan);
  return plan;
}

void execute(ComplexImage &x, int sign)
{
  auto *buf = reinterpret_cast<fftw_complex *>(x.span().data());
  fftw_execute_dft(plan_for(x.rows(), x.cols(), sign), buf, buf);
  double const scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
  for (auto &v : x) { v *= scale; }
}

auto shift(ComplexImage const &x, Index dr, Index dc) -> ComplexImage
{
  ComplexImage out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    Index const rr = (r + dr) % x.rows();
    for (Index c = 0; c < x.cols(); ++c) { out(rr, (c + dc) % x.cols()) = x(r, c); }
  }
  return out;
}

} // namespace

void fft2(ComplexImage &x) { execute(x, FFTW_FORWARD); }
void ifft2(ComplexImage &x) { execute(x, FFTW_BACKWARD); }

auto fftshift(ComplexImage const &x) -> ComplexImage { return shift(x, x.rows() / 2, x.cols() / 2); }

auto ifftshift(ComplexImage const &x) -> ComplexImage
{
  return shift(x, x.rows() - x.rows() / 2, x.cols() - x.cols() / 2);
}

SamplingOperator::SamplingOperator(SamplingPattern const &pattern, ComplexImage coil)
  : coil_{std::move(coil)}
{
  if (pattern.rows != coil_.rows() || pattern.cols != coil_.cols()) {
    throw DimensionError("sampling pattern and coil map dimensions differ");
  }
  Index const rows = pattern.rows;
  Index const cols = pattern.cols;
  natural_mask_.assign(static_cast<std::size_t>(rows * cols), 0);
  // centred (r, c) holds frequency (r - rows/2, c - cols/2)
  for (Index r = 0; r < rows; ++r) {
    Index const nr = (r - rows / 2 + rows) % rows;
    for (Index c = 0; c < cols; ++c) {
      Index const nc = (c - cols / 2 + cols) % cols;
      natural_mask_[static_cast<std::size_t>(nr * cols + nc)] = pattern(r, c) ? 1 : 0;
    }
  }
}

auto SamplingOperator::forward(ComplexImage const &u) const -> ComplexImage
{
  require_same_shape(u, coil_, "SamplingOperator::forward");
  ComplexImage k(u.rows(), u.cols());
  for (Index i = 0; i < u.size(); ++i) { k[i] = coil_[i] * u[i]; }
  fft2(k);
  for (Index i = 0; i < k.size(); ++i) {
    if (!natural_mask_[static_cast<std::size_t>(i)]) { k[i] = 0.0; }
  }
  return fftshift(k);
}

auto SamplingOperator::adjoint(ComplexImage const &y) const -> ComplexImage
{
  require_same_shape(y, coil_, "SamplingOperator::adjoint");
  ComplexImage k = ifftshift(y);
  for (Index i = 0; i < k.size(); ++i) {
    if (!natural_mask_[static_cast<std::size_t>(i)]) { k[i] = 0.0; }
  }
  ifft2(k);
  for (Index i = 0; i < k.size(); ++i) { k[i] *= std::conj(coil_[i]); }
  return k;
}

auto SamplingOperator::normal(ComplexImage const &u) const -> ComplexImage
{
  require_same_shape(u, coil_, "SamplingOperator::normal");
  ComplexImage k(u.rows(), u.cols());
  for (Index i = 0; i < u.size(); ++i) { k[i] = coil_[i] * u[i]; }
  fft2(k);
  for (Index i = 0; i < k.size(); ++i) {
    if (!natural_mask_[static_cast<std::size_t>(i)]) { k[i] = 0.0; }
  }
  ifft2(k);
  for (Index i = 0; i < k.size(); ++i) { k[i] *= std::conj(coil_[i]); }
  return k;
}

} // namespace relaxmap
