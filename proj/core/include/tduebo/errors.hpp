#pragma once

#include <stdexcept>
#include <string>

namespace tduebo {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An operation was called with inputs that violate its contract
/// (dimension mismatch, non-finite values, empty input, invalid
/// hyperparameters).
class InputError : public Error {
public:
    using Error::Error;
};

/// Invalid or infeasible configuration (protocol sizes, policy names,
/// budgets). Maps to CLI exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Dataset ingestion failure (missing file/column, unparseable or
/// non-finite cell). Maps to CLI exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

/// Numerical failure, e.g. a Cholesky factorization that stays
/// indefinite after the full jitter escalation. Maps to CLI exit
/// code 3.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double final_jitter)
        : Error(what), final_jitter_(final_jitter) {}

    /// Largest jitter tried before giving up.
    double final_jitter() const { return final_jitter_; }

private:
    double final_jitter_ = 0.0;
};

} // namespace tduebo
