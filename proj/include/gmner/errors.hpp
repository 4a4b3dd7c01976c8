#pragma once

#include <stdexcept>
#include <string>

namespace gmner {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A value passed to an operation violates its preconditions.
struct InvalidInputError : Error {
    using Error::Error;
};

/// A configuration value is inconsistent or out of range.
struct ConfigError : Error {
    using Error::Error;
};

/// A file could not be parsed; message carries the line number where known.
struct ParseError : Error {
    using Error::Error;
};

/// A dataset exceeds a model capacity limit (e.g. more gold entities than queries).
struct CapacityError : Error {
    using Error::Error;
};

} // namespace gmner
