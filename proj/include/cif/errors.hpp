#pragma once

#include <stdexcept>
#include <string>

namespace cif {

// Shape or rank mismatch between operands.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Invalid configuration value (hyperparameters, splits, file manifests).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Misuse of the computation graph (backward on a disconnected tensor, ...).
struct GraphError : std::logic_error {
    using std::logic_error::logic_error;
};

// Non-finite values or degenerate denominators.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or incompatible files.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cif
