#pragma once

#include <stdexcept>
#include <string>

namespace btcf {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain an operation is defined on.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data (files, payloads, shapes).
class DataError : public Error {
public:
    using Error::Error;
};

/// A payload is missing a required field or the field does not parse.
class SchemaError : public DataError {
public:
    explicit SchemaError(std::string field)
        : DataError("schema error: field '" + field + "'"), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Transient failure (network, HTTP status); the next attempt may succeed.
class RetryableError : public Error {
public:
    using Error::Error;
};

/// Record refused by a log because its timestamp does not advance.
class OrderError : public Error {
public:
    using Error::Error;
};

/// I/O failure on an output path.
class IoError : public Error {
public:
    using Error::Error;
};

/// Iterative estimator stopped without meeting its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_objective)
        : Error(what), last_objective_(last_objective) {}

    double last_objective() const noexcept { return last_objective_; }

private:
    double last_objective_;
};

}  // namespace btcf
