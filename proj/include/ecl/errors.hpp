#pragma once

#include <stdexcept>
#include <string>

namespace ecl {

// Shape/contract violations (wrong dimensions, empty batch, bad index).
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Domain violations of a numeric primitive (log of non-positive entry,
// normalizing a zero row, zero-norm matrix).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Invalid configuration values (tau <= 0, negative lambda, bad priors,
// malformed config files, unknown keys).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A required resource is missing (class absent from a snapshot or test set).
struct UnavailableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure at runtime (non-finite loss, non-finite probe point).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Geometry too degenerate for the requested computation (rank-deficient PCA).
struct DegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ecl
