#pragma once

#include <stdexcept>
#include <string>

namespace sensorhub {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A value is outside the domain an operation is defined on
// (sensor index out of 1..12, non-positive sampling frequency, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Input violates a structural invariant (empty sensor selection,
// wrong reading-group arity, schema mismatch on append).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Byte stream has the wrong length for the negotiated frame.
class FramingError : public Error {
public:
    using Error::Error;
};

// Bytes decode to something the protocol forbids (padding bits set).
class MalformedPacketError : public Error {
public:
    using Error::Error;
};

// Virtual sensor definition could not be loaded.
class LoadError : public Error {
public:
    using Error::Error;
};

// Bad user-supplied configuration (CLI arguments, profile files).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Queried state that only exists later in the lifecycle.
class NotReadyError : public Error {
public:
    using Error::Error;
};

// Illegal wrapper state transition.
class LifecycleError : public Error {
public:
    using Error::Error;
};

}  // namespace sensorhub
