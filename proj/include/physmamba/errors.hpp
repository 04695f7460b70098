// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace physmamba {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor extents.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf produced or detected.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Misuse of the autodiff tape.
class GraphError : public Error {
public:
    using Error::Error;
};

/// Invalid model, training or generator configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Invalid caller-supplied argument (empty inputs, bad lengths).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Operation called in a mode it does not support (e.g. convolutional scan on selective parameters).
class ModeError : public Error {
public:
    using Error::Error;
};

/// Working-set budget exceeded.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Parameter values outside their valid domain (e.g. non-positive step size).
class ParameterizationError : public Error {
public:
    using Error::Error;
};

/// Reduction that is undefined without a guard (e.g. std of one element with eps = 0).
class ReductionError : public Error {
public:
    using Error::Error;
};

/// Signal too short for the requested analysis.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Missing or unreadable file/directory.
class IoError : public Error {
public:
    using Error::Error;
};

/// Corrupt or incompatible on-disk data. The message always names the offending file.
class FormatError : public Error {
public:
    FormatError(const std::string& file, const std::string& what)
        : Error(file + ": " + what), file_(file) {}

    const std::string& file() const noexcept { return file_; }

private:
    std::string file_;
};

}  // namespace physmamba
