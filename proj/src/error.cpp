#include "maxsim/error.hpp"

namespace maxsim {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kMissingInstruction: return "MissingInstruction";
    case ErrorCode::kEndpointUnavailable: return "EndpointUnavailable";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kMissingGeometry: return "MissingGeometry";
    case ErrorCode::kExcludedPair: return "ExcludedPair";
    case ErrorCode::kDistractorNotAllowed: return "DistractorNotAllowed";
    case ErrorCode::kUnknownAction: return "UnknownAction";
    case ErrorCode::kIncompleteSpec: return "IncompleteSpec";
    case ErrorCode::kDuplicateOutput: return "DuplicateOutput";
    case ErrorCode::kMediaError: return "MediaError";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNoData: return "NoData";
    case ErrorCode::kInconsistentInputs: return "InconsistentInputs";
    case ErrorCode::kCacheMismatch: return "CacheMismatch";
  }
  return "UnknownError";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kMissingInstruction:
      return 2;
    case ErrorCode::kEndpointUnavailable:
      return 3;
    default:
      return 4;
  }
}

}  // namespace maxsim
