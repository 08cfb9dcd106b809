#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "relaxmap/error.hpp"

namespace relaxmap {

using Index = std::ptrdiff_t;
using Complex = std::complex<double>;

// Dense row-major 2-D grid. Used for k-space planes, coil maps and every
// parametric map (magnitude, phase, H0, R2*).
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(Index rows, Index cols, T fill = T{})
    : rows_{rows}, cols_{cols}
  {
    if (rows <= 0 || cols <= 0) {
      throw DimensionError("image dimensions must be positive, got " + std::to_string(rows) + "x" +
                           std::to_string(cols));
    }
    data_.assign(static_cast<std::size_t>(rows * cols), fill);
  }
  Image(Index rows, Index cols, std::vector<T> data)
    : rows_{rows}, cols_{cols}, data_{std::move(data)}
  {
    if (rows <= 0 || cols <= 0 || static_cast<Index>(data_.size()) != rows * cols) {
      throw DimensionError("image data length does not match " + std::to_string(rows) + "x" +
                           std::to_string(cols));
    }
  }

  [[nodiscard]] auto rows() const -> Index { return rows_; }
  [[nodiscard]] auto cols() const -> Index { return cols_; }
  [[nodiscard]] auto size() const -> Index { return static_cast<Index>(data_.size()); }
  [[nodiscard]] auto empty() const -> bool { return data_.empty(); }

  auto operator()(Index r, Index c) -> T & { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
  auto operator()(Index r, Index c) const -> T const &
  {
    return data_[static_cast<std::size_t>(r * cols_ + c)];
  }
  auto operator[](Index i) -> T & { return data_[static_cast<std::size_t>(i)]; }
  auto operator[](Index i) const -> T const & { return data_[static_cast<std::size_t>(i)]; }

  auto span() -> std::span<T> { return data_; }
  [[nodiscard]] auto span() const -> std::span<T const> { return data_; }
  auto vec() -> std::vector<T> & { return data_; }
  [[nodiscard]] auto vec() const -> std::vector<T> const & { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  [[nodiscard]] auto begin() const { return data_.begin(); }
  [[nodiscard]] auto end() const { return data_.end(); }

  [[nodiscard]] auto same_shape(Image const &other) const -> bool
  {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  template <typename U>
  [[nodiscard]] auto same_shape(Image<U> const &other) const -> bool
  {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  auto operator==(Image const &other) const -> bool = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<T> data_;
};

using RealImage = Image<double>;
using ComplexImage = Image<Complex>;

template <typename T, typename U>
void require_same_shape(Image<T> const &a, Image<U> const &b, char const *what)
{
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
  }
}

auto all_finite(RealImage const &img) -> bool;
auto all_finite(ComplexImage const &img) -> bool;

auto real_part(ComplexImage const &z) -> RealImage;
auto magnitude(ComplexImage const &z) -> RealImage;
auto to_complex(RealImage const &x) -> ComplexImage;
// exp(j * theta) pixel-wise.
auto unit_phasor(RealImage const &theta) -> ComplexImage;

auto norm2(RealImage const &x) -> double;
auto norm2(ComplexImage const &x) -> double;
auto dot(RealImage const &a, RealImage const &b) -> double;
// <a, b> = sum conj(a) * b
auto dot(ComplexImage const &a, ComplexImage const &b) -> Complex;

} // namespace relaxmap
