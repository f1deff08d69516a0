#pragma once

#include <stdexcept>
#include <string>

namespace paretopool {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The operation is not defined for this input kind (e.g. PRA of a tabulated distortion).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// A derivative used as a denominator vanished.
class SingularityError : public Error {
public:
    using Error::Error;
};

class LengthMismatchError : public Error {
public:
    using Error::Error;
};

class InvalidWeightsError : public Error {
public:
    using Error::Error;
};

/// A configured resource cap (e.g. exhaustive enumeration size) was exceeded.
class ResourceError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside a solver (infeasible or unbounded LP, iteration limit).
class SolverError : public Error {
public:
    using Error::Error;
};

/// Malformed input data.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace paretopool
