#pragma once

#include <stdexcept>
#include <string>

namespace aai {

// Base class for all toolkit errors. The CLI maps subclasses to exit codes:
// ConfigError -> 1, DataError/ShapeError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration or unusable parameter combination.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Malformed or inconsistent input data (files, corpus layout, coverage).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Dimension / point-count mismatch between containers.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Non-finite values, degenerate statistics, diverged training.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

} // namespace aai
