#pragma once

#include <stdexcept>
#include <string>

namespace aq {

// Tensor/image extent mismatch. Messages name the offending shapes.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Rejected configuration (bad block list, empty class, invalid fraction, ...).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Bad runtime value: label out of range, missing gradients, non-finite data.
class ValueError : public std::runtime_error {
public:
    explicit ValueError(const std::string& what) : std::runtime_error(what) {}
};

// File, CSV or image input problems.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Non-fatal diagnostic to stderr.
void warn(const std::string& message);

}  // namespace aq
