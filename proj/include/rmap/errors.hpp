#pragma once

#include <stdexcept>
#include <string>

namespace rmap {

// Base for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration file or invalid option values (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

// Missing or malformed input data (CLI exit code 3).
struct DataError : Error {
    using Error::Error;
};

// Numerical failures during inference (CLI exit code 4).
struct NumericError : Error {
    using Error::Error;
};

// Beam-pruned decoding reached a time step with no feasible predecessor.
struct DecodeError : NumericError {
    using NumericError::NumericError;
};

// Degenerate parameter fit (e.g. singular normal equations).
struct FitError : NumericError {
    using NumericError::NumericError;
};

}  // namespace rmap
