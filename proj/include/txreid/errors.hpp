#pragma once

#include <stdexcept>
#include <string>

namespace txreid {

// Error taxonomy shared by the library and the CLI. The CLI maps UsageError
// to exit code 2 and everything else to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller misuse: invalid mode index, mismatched shapes, out-of-range options.
struct UsageError : Error {
  using Error::Error;
};

// Input is structurally valid but unusable: missing views, disjoint identity
// sets, non-finite values, empty pair sets.
struct DataError : Error {
  using Error::Error;
};

// Two inputs that must agree on shape do not (e.g. fusing tensors with
// different part lengths).
struct ShapeError : DataError {
  using DataError::DataError;
};

// A file does not parse under its declared format.
struct FormatError : Error {
  using Error::Error;
};

// Numerical failure: singular matrices, failed eigendecompositions,
// degenerate problems with no discriminative directions.
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace txreid
