#pragma once

#include <stdexcept>
#include <string>

namespace rewind {

// Base for all library errors. Subtypes map to distinct CLI exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration (bad ranges, inconsistent knobs).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
public:
    using Error::Error;
};

// File could not be read as the expected format.
class ParseError : public DataError {
public:
    using DataError::DataError;
};

// Well-formed file whose contents violate an invariant.
class SchemaError : public DataError {
public:
    using DataError::DataError;
};

// Tensor/vector shape mismatch between arguments.
class DimensionError : public DataError {
public:
    using DataError::DataError;
};

// Filesystem failure (unreadable/unwritable path).
class IoError : public DataError {
public:
    using DataError::DataError;
};

// Operation invoked in a state its contract forbids.
class ProtocolError : public Error {
public:
    using Error::Error;
};

} // namespace rewind
