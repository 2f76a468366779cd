#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace surgcurate {

enum class ErrorCode {
  kParse,
  kUnknownDataset,
  kZeroDimension,
  kFrameTooSmall,
  kIo,
  kBadMagic,
  kSizeMismatch,
  kChecksumMismatch,
  kNonFiniteValue,
  kZeroRow,
  kKTooLarge,
  kDimensionMismatch,
  kInvalidLevels,
  kFractionOutOfRange,
  kQuotaExceedsMembers,
  kEmptyPool,
  kInvalidPolicy,
  kEmptyDataset,
  kEmptyEvaluation,
  kMissingDomain,
  kMissingVariant,
  kColumnMismatch,
  kConfigError,
  kInputMissing,
};

std::string_view error_name(ErrorCode code) noexcept;

// All library failures are reported through this exception; `code()` is the
// stable, machine-readable part.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Errors that point at one row or record (NonFiniteValue, ZeroRow).
class IndexedError : public Error {
 public:
  IndexedError(ErrorCode code, std::size_t index, const std::string& message)
      : Error(code, message), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace surgcurate
