#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nlw {

/// Bad user input (config, CLI arguments, out-of-domain parameters). Maps to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Anything that goes wrong while computing. Maps to exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResonantExponent : NumericalError {
    using NumericalError::NumericalError;
};

struct BlowupNotReached : NumericalError {
    using NumericalError::NumericalError;
};

struct GaugeLawViolation : NumericalError {
    using NumericalError::NumericalError;
};

struct FitError : NumericalError {
    using NumericalError::NumericalError;
};

// Non-fatal conditions are collected here instead of printed.
struct Diagnostics {
    std::vector<std::string> warnings;
    void warn(std::string msg) { warnings.push_back(std::move(msg)); }
};

} // namespace nlw
