#pragma once

#include <stdexcept>

namespace stitch {

// Base class for every error the library throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid arguments or configuration. CLI exit code 1.
struct UsageError : Error {
    using Error::Error;
};

// Bad input data: unreadable files, dimension mismatches, degenerate geometry. CLI exit code 2.
struct DataError : Error {
    using Error::Error;
};

// Numerical failure: divergence, non-finite values, infeasible cuts. CLI exit code 3.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace stitch
