#ifndef OCTOMIDI_ERROR_H_
#define OCTOMIDI_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace octomidi {

enum class ErrorCode {
  kMalformedFile,
  kUnsupportedFormat,
  kUnsupportedTimeSig,
  kBarOverflow,
  kMaskedTokenPresent,
  kOutOfVocabulary,
  kBadIndex,
  kBadM,
  kEmptySequence,
  kMethodNotAllowed,
  kDimensionMismatch,
  kDegenerateCount,
  kAllEmpty,
  kTooFewBars,
  kAlignmentMismatch,
  kOutOfRange,
  kFormatError,
  kInvalidConfig,
  kIoError,
  kEmptyCorpus,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace octomidi

#endif  // OCTOMIDI_ERROR_H_
