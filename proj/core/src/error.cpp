#include "spkid/error.hpp"

namespace spkid {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kCorruptHeader: return "CorruptHeader";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kSingleClassInput: return "SingleClassInput";
    case ErrorCode::kNonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kUtteranceMismatch: return "UtteranceMismatch";
    case ErrorCode::kComponentCountMismatch: return "ComponentCountMismatch";
    case ErrorCode::kSpeakerSetMismatch: return "SpeakerSetMismatch";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateUtterance: return "DuplicateUtterance";
    case ErrorCode::kMissingAudio: return "MissingAudio";
    case ErrorCode::kInsufficientUtterances: return "InsufficientUtterances";
    case ErrorCode::kEmptyDecisions: return "EmptyDecisions";
    case ErrorCode::kLeakage: return "Leakage";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
    case ErrorCode::kUnsupportedFormat:
    case ErrorCode::kCorruptHeader:
    case ErrorCode::kIoFailure:
      return ErrorCategory::kIo;
    case ErrorCode::kConfigInvalid:
    case ErrorCode::kParseError:
    case ErrorCode::kDuplicateUtterance:
    case ErrorCode::kMissingAudio:
    case ErrorCode::kInsufficientUtterances:
      return ErrorCategory::kInput;
    default:
      return ErrorCategory::kTraining;
  }
}

}  // namespace spkid
