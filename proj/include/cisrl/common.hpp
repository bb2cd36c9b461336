#pragma once

#include <stdexcept>
#include <string>

namespace cisrl {

// Error taxonomy. Everything is recoverable by the caller except
// SafetyFaultError, which signals a broken invariance certificate.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : Error {
    using Error::Error;
};

struct ConvergenceError : Error {
    using Error::Error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct SynthesisError : Error {
    using Error::Error;
};

struct DegenerateSetError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct SafetyFaultError : Error {
    using Error::Error;
};

} // namespace cisrl
