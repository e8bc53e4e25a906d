#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fewphoton {

enum class ErrorKind {
  CutoffTooSmall,
  DimensionMismatch,
  ConvergenceFailure,
  StepTooLarge,
  DegenerateMeanSpin,
  GridMismatch,
  Config,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::CutoffTooSmall: return "CutoffTooSmall";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::DegenerateMeanSpin: return "DegenerateMeanSpin";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::Config: return "ConfigError";
  }
  return "Unknown";
}

// All library failures are reported through this one exception type; `kind`
// lets callers (and the CLI exit-code mapping) branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string field = {})
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Offending config field or sector id, when there is one.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

}  // namespace fewphoton
