#pragma once

#include <stdexcept>
#include <string>

namespace covkit {

// Bad configuration: unknown names, invalid window parameters, inconsistent
// options.  Maps to a usage error at the CLI boundary.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Numeric failure while computing: insufficient batches, singular or
// non-positive-definite matrices, unstable models.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// File and format problems: missing files, ragged CSV, bad magic, NaN cells.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace covkit
