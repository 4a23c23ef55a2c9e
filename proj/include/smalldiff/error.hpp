#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smalldiff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression source. `offset()` is the byte offset of the problem.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t offset)
        : Error(message + " at offset " + std::to_string(offset)), offset_(offset) {}

    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Expression evaluation left its domain (division by zero, sqrt of a
/// negative number, non-finite result).
class EvalError : public Error {
public:
    using Error::Error;
};

/// A simulated or integrated state became non-finite or exceeded the
/// blow-up guard.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& message, double time)
        : Error(message + " at t=" + std::to_string(time)), time_(time) {}

    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

/// The limit variance (or its estimate) is numerically zero, so the test
/// statistic cannot be normalized.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Invalid data file contents. `line()` is 1-based, 0 when not applicable.
class DataError : public Error {
public:
    DataError(const std::string& message, std::size_t line)
        : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
          line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Experiment or model configuration rejected before any work is done.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace smalldiff
