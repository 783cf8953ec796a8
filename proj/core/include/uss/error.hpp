#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uss {

enum class ErrorCode {
  kZeroNorm,
  kLengthMismatch,
  kInvalidConfig,
  kInsufficientData,
  kIdMismatch,
  kShapeMismatch,
  kStaleCache,
  kEmptyScores,
  kInsufficientPairs,
  kVersionMismatch,
  kParseError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code so the
// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace uss
