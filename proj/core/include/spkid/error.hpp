#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spkid {

enum class ErrorCode {
  kNotFound,
  kUnsupportedFormat,
  kCorruptHeader,
  kIoFailure,
  kConfigInvalid,
  kNumericalFailure,
  kDimensionMismatch,
  kInsufficientData,
  kSingleClassInput,
  kNonFiniteFeature,
  kEmptyTrainingSet,
  kEmptyClass,
  kUtteranceMismatch,
  kComponentCountMismatch,
  kSpeakerSetMismatch,
  kNotNormalized,
  kEmptyScores,
  kParseError,
  kDuplicateUtterance,
  kMissingAudio,
  kInsufficientUtterances,
  kEmptyDecisions,
  kLeakage,
};

std::string_view to_string(ErrorCode code);

// Coarse failure category, used by the CLI to pick an exit status.
enum class ErrorCategory { kInput, kTraining, kIo };

ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spkid
