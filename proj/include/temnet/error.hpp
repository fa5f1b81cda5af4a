#pragma once

#include <stdexcept>
#include <string>

namespace temnet {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration: unknown columns, invalid knobs, missing files named in a config.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Malformed or inconsistent input data (non-positive prices, empty date intersection, ...).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Not enough observations to evaluate an estimator or statistic.
class InsufficientDataError : public DataError {
public:
    explicit InsufficientDataError(const std::string& msg) : DataError(msg) {}
};

// A metric whose defining ratio has no value on this input (e.g. zero denominator).
class UndefinedMetricError : public DataError {
public:
    explicit UndefinedMetricError(const std::string& msg) : DataError(msg) {}
};

// Filesystem-level failure while reading or writing artifacts.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace temnet
