#pragma once

#include <stdexcept>
#include <string>

namespace cwlssvm {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments: wrong dimensions, non-finite values, violated preconditions.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A linear system could not be solved to the required accuracy.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// File access or parse failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace cwlssvm
