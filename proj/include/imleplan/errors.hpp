#pragma once

#include <stdexcept>
#include <string>

namespace imleplan {

// error taxonomy, mirrored by CLI exit codes:
//   IoError -> 1, ConfigError -> 2, DivergenceError/NumericError -> 3, DimensionError -> 4
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DivergenceError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

struct DimensionError : Error {
  using Error::Error;
};

}  // namespace imleplan
