#pragma once

#include <stdexcept>
#include <string>

namespace pss {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data or configuration. The CLI maps this to exit code 2;
// anything else that escapes is an internal error (exit 1).
class ValidationError : public Error {
public:
    using Error::Error;
};

} // namespace pss
