#pragma once

#include <stdexcept>
#include <string>

namespace wgboost {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (dimension mismatch, non-finite
// input, out-of-range label passed to a target).
class ContractError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data (CSV rows, labels, model files).
class DataError : public Error {
public:
    using Error::Error;
};

// Numerical breakdown: singular systems, overflow during particle updates.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace wgboost
