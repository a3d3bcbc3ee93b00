#pragma once

#include <stdexcept>
#include <string>

namespace fracvisc {

/// Precondition violated by the caller (bad order, empty mask, mismatched sizes, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A factorization, linear solve, or time step produced something unusable.
class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Armijo backtracking ran out of trial steps.
class LineSearchFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Output files could not be written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fracvisc
