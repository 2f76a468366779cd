#include "surgcurate/error.hpp"

namespace surgcurate {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kUnknownDataset: return "UnknownDataset";
    case ErrorCode::kZeroDimension: return "ZeroDimension";
    case ErrorCode::kFrameTooSmall: return "FrameTooSmall";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kSizeMismatch: return "SizeMismatch";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kZeroRow: return "ZeroRow";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidLevels: return "InvalidLevels";
    case ErrorCode::kFractionOutOfRange: return "FractionOutOfRange";
    case ErrorCode::kQuotaExceedsMembers: return "QuotaExceedsMembers";
    case ErrorCode::kEmptyPool: return "EmptyPool";
    case ErrorCode::kInvalidPolicy: return "InvalidPolicy";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kEmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::kMissingDomain: return "MissingDomain";
    case ErrorCode::kMissingVariant: return "MissingVariant";
    case ErrorCode::kColumnMismatch: return "ColumnMismatch";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kInputMissing: return "InputMissing";
  }
  return "Unknown";
}

}  // namespace surgcurate
