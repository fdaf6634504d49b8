#pragma once

#include <stdexcept>
#include <string>

namespace pacer {

// Bad dimensions, bad config keys/values, unsupported combinations.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// API misuse: backward on an empty tape, NaN actions, and the like.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Asked for more than is available yet (e.g. sampling an underfilled buffer).
struct NotReadyError : std::runtime_error {
  explicit NotReadyError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite losses or gradients during optimization.
struct TrainingError : std::runtime_error {
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pacer
