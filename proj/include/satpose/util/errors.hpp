#pragma once

#include <stdexcept>
#include <string>

namespace satpose {

// Exit codes used by the CLI. Library code throws; the CLI maps to codes.
enum class ExitCode : int { Ok = 0, ConfigError = 2, DataError = 3, NumericalError = 4 };

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatches, degenerate geometry, NaN/Inf detection.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : NumericalError {
  explicit ShapeError(const std::string& msg) : NumericalError(msg) {}
};

struct DegenerateRotationError : NumericalError {
  explicit DegenerateRotationError(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace satpose
