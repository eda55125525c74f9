#pragma once

#include <stdexcept>
#include <string>

namespace spnn {

/// Base for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent dimensions or structure; the caller built something invalid.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data that violates a documented precondition (non-finite values,
/// out-of-range indices, unknown labels, gain where passivity is required).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed file content. Carries the location when one is known.
class ParseError : public Error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), path_(path), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_ = 0;
};

/// Requested value lies outside what a device can realize.
class OutOfRangeError : public ValidationError {
public:
    OutOfRangeError(const std::string& what, double deficit)
        : ValidationError(what), deficit_(deficit) {}

    /// Shortfall in the unit named by the message (degrees for phase requests).
    double deficit() const noexcept { return deficit_; }

private:
    double deficit_;
};

/// NaN/Inf produced during computation, or a singular model evaluation.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace spnn
