#pragma once

#include <stdexcept>
#include <string>

namespace mgml {

// Error taxonomy used across the library. The C API maps ConfigError to
// MGML_ERR_CONFIG and everything else to MGML_ERR_RUNTIME.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid shapes fed to an op (mismatched dims, impossible output size).
struct ShapeError : Error {
    using Error::Error;
};

// Index or anchor outside the tensor it addresses.
struct BoundsError : Error {
    using Error::Error;
};

// Bad configuration: unknown/missing keys, invalid hyperparameters,
// degenerate crop setups.
struct ConfigError : Error {
    using Error::Error;
};

// Misuse of the API contract (e.g. backward called twice on one trace,
// optimizer step without gradients).
struct UsageError : Error {
    using Error::Error;
};

// File parsing / serialization failures.
struct IoError : Error {
    using Error::Error;
};

} // namespace mgml
