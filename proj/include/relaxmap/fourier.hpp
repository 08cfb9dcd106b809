#pragma once

#include <cstdint>
#include <vector>

#include "relaxmap/image.hpp"
#include "relaxmap/sampling.hpp"

namespace relaxmap {

// Unitary 2-D DFT (1/sqrt(N) in both directions), in place, natural layout.
void fft2(ComplexImage &x);
void ifft2(ComplexImage &x);

// Centred k-space <-> natural FFT layout.
auto fftshift(ComplexImage const &x) -> ComplexImage;
auto ifftshift(ComplexImage const &x) -> ComplexImage;

// A_ij = P_i F S_j: coil weighting, unitary FFT, then the echo's mask. Output
// is in centred k-space layout, zero outside the pattern.
class SamplingOperator {
 public:
  SamplingOperator(SamplingPattern const &pattern, ComplexImage coil);

  [[nodiscard]] auto forward(ComplexImage const &u) const -> ComplexImage;
  [[nodiscard]] auto adjoint(ComplexImage const &y) const -> ComplexImage;
  // A* A u without the intermediate shift.
  [[nodiscard]] auto normal(ComplexImage const &u) const -> ComplexImage;

  [[nodiscard]] auto rows() const -> Index { return coil_.rows(); }
  [[nodiscard]] auto cols() const -> Index { return coil_.cols(); }
  [[nodiscard]] auto coil() const -> ComplexImage const & { return coil_; }

 private:
  std::vector<std::uint8_t> natural_mask_;
  ComplexImage coil_;
};

} // namespace relaxmap
