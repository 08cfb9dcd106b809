#pragma once

#include <span>
#include <vector>

#include "relaxmap/image.hpp"

namespace relaxmap {

// Scaling (low-pass) filter of the orthonormal Daubechies wavelet with
// `order` vanishing moments, order in [1, 8]. Length 2 * order.
auto daubechies_filter(int order) -> std::span<double const>;

// Sparsity-averaging frame: the concatenation of several orthonormal 2-D
// Daubechies transforms, each scaled by 1/sqrt(member count), so that
// adjoint(forward(x)) == x.
//
// Images are zero-padded to a multiple of 2^levels (cropping is the exact
// adjoint of zero padding) and transformed with periodic boundaries.
// Coefficient layout: members in the order given; within a member the coarse
// approximation block first, then the three detail blocks of each level from
// coarse to fine, each block row-major.
class WaveletFrame {
 public:
  // Members db1..db8.
  WaveletFrame(Index rows, Index cols, int levels = 4);
  WaveletFrame(Index rows, Index cols, int levels, std::vector<int> orders);

  [[nodiscard]] auto forward(RealImage const &x) const -> std::vector<double>;
  [[nodiscard]] auto adjoint(std::span<double const> coeffs) const -> RealImage;

  [[nodiscard]] auto rows() const -> Index { return rows_; }
  [[nodiscard]] auto cols() const -> Index { return cols_; }
  [[nodiscard]] auto levels() const -> int { return levels_; }
  [[nodiscard]] auto padded_rows() const -> Index { return prows_; }
  [[nodiscard]] auto padded_cols() const -> Index { return pcols_; }
  [[nodiscard]] auto members() const -> std::vector<int> const & { return orders_; }
  [[nodiscard]] auto scale() const -> double { return scale_; }
  [[nodiscard]] auto coefficient_count() const -> Index
  {
    return static_cast<Index>(orders_.size()) * prows_ * pcols_;
  }
  // Offset of a member's block inside the coefficient vector.
  [[nodiscard]] auto member_offset(std::size_t member) const -> Index
  {
    return static_cast<Index>(member) * prows_ * pcols_;
  }

 private:
  Index rows_;
  Index cols_;
  int levels_;
  Index prows_;
  Index pcols_;
  std::vector<int> orders_;
  double scale_;
};

// sign(c) * max(|c| - tau, 0), entrywise.
auto soft_threshold(std::span<double const> c, double tau) -> std::vector<double>;
void soft_threshold_inplace(std::span<double> c, double tau);

auto l1_norm(std::span<double const> c) -> double;

} // namespace relaxmap
