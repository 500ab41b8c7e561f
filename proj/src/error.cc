#include "octomidi/error.h"

namespace octomidi {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kUnsupportedTimeSig: return "UnsupportedTimeSig";
    case ErrorCode::kBarOverflow: return "BarOverflow";
    case ErrorCode::kMaskedTokenPresent: return "MaskedTokenPresent";
    case ErrorCode::kOutOfVocabulary: return "OutOfVocabulary";
    case ErrorCode::kBadIndex: return "BadIndex";
    case ErrorCode::kBadM: return "BadM";
    case ErrorCode::kEmptySequence: return "EmptySequence";
    case ErrorCode::kMethodNotAllowed: return "MethodNotAllowed";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDegenerateCount: return "DegenerateCount";
    case ErrorCode::kAllEmpty: return "AllEmpty";
    case ErrorCode::kTooFewBars: return "TooFewBars";
    case ErrorCode::kAlignmentMismatch: return "AlignmentMismatch";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

}  // namespace octomidi
