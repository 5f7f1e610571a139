// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <stdexcept>
#include <string>

namespace nptot {

// Bad input data: malformed files, empty corpora, out-of-domain values.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure: non-finite estimates, impossible count states.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nptot
