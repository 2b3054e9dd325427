#pragma once

#include <stdexcept>
#include <string>

namespace optreward {

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Raised when a moment estimator needs more labeled samples (n >= 2 for
// the pair-based diagonal).
struct InsufficientSamples : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};

// Raised when the unlabeled pool is smaller than the polynomial degree.
struct InsufficientUnlabeled : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};

struct NotPsd : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IllConditionedCovariance : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& message, long line)
        : std::runtime_error(message + " (line " + std::to_string(line) + ")"), line_number(line) {}
    long line_number;
};

}  // namespace optreward
