#pragma once

#include "relaxmap/image.hpp"

namespace relaxmap {

// Mean of |truth - estimate| / |truth| over pixels where mask == 1.
auto masked_relative_error(RealImage const &truth, RealImage const &estimate, RealImage const &mask)
  -> double;

auto image_linf_diff(RealImage const &a, RealImage const &b) -> double;
auto image_linf_diff(ComplexImage const &a, ComplexImage const &b) -> double;

auto mask_count(RealImage const &mask) -> Index;

} // namespace relaxmap
