#pragma once

#include <stdexcept>
#include <string>

namespace vbglmm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DataErrorKind {
    DimensionMismatch,
    InvalidResponse,
    MissingIntercept,
    EmptyCluster,
    NonFinite,
    MissingColumn,
    ParseError,
    EmptyFile,
};

/// Malformed or inconsistent input data (CSV or in-memory dataset).
class DataError : public Error {
public:
    DataError(DataErrorKind kind, const std::string& what)
        : Error(what), kind_(kind) {}
    DataErrorKind kind() const noexcept { return kind_; }

private:
    DataErrorKind kind_;
};

enum class NumericalErrorKind {
    Overflow,
    NewtonDiverged,
    MaxIterExceeded,
    NonFinite,
    NotPositiveDefinite,
    StalledLineSearch,
};

/// A numerical routine failed (overflow, divergence, stalled line search).
class NumericalError : public Error {
public:
    NumericalError(NumericalErrorKind kind, const std::string& what)
        : Error(what), kind_(kind) {}
    NumericalErrorKind kind() const noexcept { return kind_; }

private:
    NumericalErrorKind kind_;
};

/// Invalid configuration or option value.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace vbglmm
