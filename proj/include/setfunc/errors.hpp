#pragma once

#include <stdexcept>
#include <string>

namespace setfunc {

// Base class for all recoverable errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible matrix/vector dimensions; message carries both shapes.
struct ShapeError : Error {
    using Error::Error;
};

// Input outside an operation's mathematical domain (empty set, nonpositive
// value under a positivity-requiring aggregator, ...).
struct DomainError : Error {
    using Error::Error;
};

// Malformed or inconsistent configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Structured input that fails a validation contract (weights off the
// simplex, fractions not summing to one, ...).
struct ValidationError : Error {
    using Error::Error;
};

// Request exceeds a hard enumeration budget.
struct ResourceError : Error {
    using Error::Error;
};

// Non-finite value surfaced during computation.
struct NumericError : Error {
    using Error::Error;
};

// Malformed serialized data; message carries the offending location.
struct ParseError : Error {
    using Error::Error;
};

// API misuse, e.g. backward called with a cache from a different forward.
struct ContractError : Error {
    using Error::Error;
};

}  // namespace setfunc
