#pragma once

#include <stdexcept>
#include <string>

namespace tsr {

/// Invalid configuration value (bad ranges, inconsistent options).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape or size mismatch between tensors / network stages.
class DimensionError : public std::runtime_error {
public:
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File or stream failure.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// API misuse (stale tape, wrong call order).
class UsageError : public std::runtime_error {
public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tsr
