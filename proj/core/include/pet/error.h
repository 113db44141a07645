// pet/error.h
//
// Error type shared by every module. Each failure carries a kind so callers
// (notably the command-line driver) can map it onto an exit status.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pet {

enum class ErrorKind {
  // lexicon
  kDuplicateToken,
  kMalformedPronunciation,
  kMissingTone,
  kUnknownToken,
  kEmptyLexicon,
  // embedding / feature configs
  kInvalidConfig,
  kUnknownFeatureLetter,
  kJoinerMissingW,
  kToneOnNonTonal,
  // transducer
  kShapeMismatch,
  kNumericalUnderflow,
  // training
  kInvalidSpec,
  kDivergenceDetected,
  kConfigMismatch,
  // analysis
  kEmptyCorpus,
  // plumbing
  kIo,
  kParse,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit statuses used by the CLI: 0 success, 1 usage error,
// 2 data error, 3 numerical failure.
int ExitCodeFor(ErrorKind kind);

}  // namespace pet
