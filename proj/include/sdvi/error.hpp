// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>

namespace sdvi {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or malformed argument.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Cross-field configuration constraint violated (step alignment, CFL, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Linear-solve failure, iteration cap, explosion, NaN.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Object used in a state that does not support the request.
class StateError : public Error {
public:
    using Error::Error;
};

/// Point outside the closure of Dom(phi).
class DomainError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace sdvi
