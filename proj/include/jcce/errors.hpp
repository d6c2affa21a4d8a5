#pragma once

#include <stdexcept>
#include <string>

namespace jcce {

/// Dimension mismatch between operands. Never broadcast silently.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// Bad configuration value or unknown configuration key.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed, missing or inconsistent data (files, schemas, catalogs, logs).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values or a quantity that is undefined for the given input.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace jcce
