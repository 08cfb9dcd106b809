#pragma once

#include <stdexcept>
#include <string>

namespace relaxmap {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

// Requested sampling rate cannot be reached under the distance constraint.
struct InfeasiblePattern : Error {
  InfeasiblePattern(std::string const &msg, double achievable)
    : Error(msg), achievable_rate{achievable}
  {
  }
  double achievable_rate;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

} // namespace relaxmap
