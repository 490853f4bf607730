#pragma once

#include <stdexcept>
#include <string>

namespace ppe {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input data (annotation files, fixture files, recipe JSON).
class FormatError : public Error {
public:
    using Error::Error;
};

// Out-of-range or inconsistent parameters.
class ParameterError : public Error {
public:
    using Error::Error;
};

// Detector backend failures (missing model, shape mismatch).
class BackendError : public Error {
public:
    using Error::Error;
};

// Bad configuration files or values.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace ppe
