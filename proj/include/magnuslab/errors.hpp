#pragma once

#include <stdexcept>
#include <string>

namespace magnuslab {

/// Base class for all magnuslab errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed expressions, problem files, out-of-range options.
/// The CLI maps this to exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed to meet its contract (non-convergence,
/// step-size underflow, branch-cut violation, ...). CLI exit code 2.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace magnuslab
