#pragma once

#include <stdexcept>
#include <string>

namespace floodcast {

// Base class for all library errors. CLI maps ConfigError to exit code 2,
// everything else to exit code 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/matrix extent disagreements.
struct DimensionError : Error {
    using Error::Error;
};

// Malformed or inconsistent input data (CSV contents, labels, grids).
struct DataError : Error {
    using Error::Error;
};

// Invalid configuration or usage.
struct ConfigError : Error {
    using Error::Error;
};

// Numeric failures: non-convergence, NaN loss.
struct NumericError : Error {
    using Error::Error;
};

// Checkpoint load failures: corrupt file, version or architecture mismatch.
struct CheckpointError : Error {
    using Error::Error;
};

// Argument outside a function's mathematical domain.
struct DomainError : Error {
    using Error::Error;
};

}  // namespace floodcast
