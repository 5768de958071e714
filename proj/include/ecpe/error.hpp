#pragma once

#include <stdexcept>
#include <string>

namespace ecpe {

// Malformed or inconsistent input data. The CLI maps this to exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient, or a numeric contract violation.
// The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ecpe
