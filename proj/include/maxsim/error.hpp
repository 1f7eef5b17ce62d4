#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maxsim {

enum class ErrorCode {
  // configuration and usage
  kConfigError,
  kMissingInstruction,
  // endpoint failures
  kEndpointUnavailable,
  // data inconsistencies
  kParseError,
  kIoError,
  kMissingGeometry,
  kExcludedPair,
  kDistractorNotAllowed,
  kUnknownAction,
  kIncompleteSpec,
  kDuplicateOutput,
  kMediaError,
  kDimensionMismatch,
  kNoData,
  kInconsistentInputs,
  kCacheMismatch,
};

std::string_view error_code_name(ErrorCode code);

// Process exit classes: 2 config error, 3 endpoint failure, 4 data inconsistency.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace maxsim
