// pet/error.cc

#include "pet/error.h"

namespace pet {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDuplicateToken: return "DuplicateToken";
    case ErrorKind::kMalformedPronunciation: return "MalformedPronunciation";
    case ErrorKind::kMissingTone: return "MissingTone";
    case ErrorKind::kUnknownToken: return "UnknownToken";
    case ErrorKind::kEmptyLexicon: return "EmptyLexicon";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kUnknownFeatureLetter: return "UnknownFeatureLetter";
    case ErrorKind::kJoinerMissingW: return "JoinerMissingW";
    case ErrorKind::kToneOnNonTonal: return "ToneOnNonTonal";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kNumericalUnderflow: return "NumericalUnderflow";
    case ErrorKind::kInvalidSpec: return "InvalidSpec";
    case ErrorKind::kDivergenceDetected: return "DivergenceDetected";
    case ErrorKind::kConfigMismatch: return "ConfigMismatch";
    case ErrorKind::kEmptyCorpus: return "EmptyCorpus";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kParse: return "ParseError";
  }
  return "Unknown";
}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUnknownFeatureLetter:
    case ErrorKind::kJoinerMissingW:
    case ErrorKind::kToneOnNonTonal:
    case ErrorKind::kInvalidConfig:
    case ErrorKind::kInvalidSpec:
      return 1;
    case ErrorKind::kNumericalUnderflow:
    case ErrorKind::kDivergenceDetected:
      return 3;
    default:
      return 2;
  }
}

}  // namespace pet
