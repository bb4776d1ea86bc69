#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sparkle {

/// Bad or inconsistent configuration (kernel parameters, policy settings,
/// malformed config files). CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid runtime input (dimension mismatch, non-finite data, empty batch).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem failure while writing outputs.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace sparkle
