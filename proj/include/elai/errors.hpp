#pragma once

#include <stdexcept>
#include <string>

namespace elai {

enum class ErrorCode {
  // dataset
  MissingColumn,
  NonNumericCell,
  UnknownLabel,
  EmptyFile,
  TooFewRows,
  DimensionMismatch,
  BadFractions,
  ClassAbsent,
  NoCategories,
  UnknownCategory,
  // features
  BadK,
  NonConvergence,
  SingularScatter,
  LengthMismatch,
  // model
  BadConfig,
  TraceMismatch,
  // training
  ShapeMismatch,
  NonFiniteLoss,
  IoFailure,
  VersionMismatch,
  CorruptCheckpoint,
  // explain
  TooManyFeatures,
  BadIndex,
  // metrics
  UndefinedMetric,
  SingleClass,
};

constexpr const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadFractions: return "BadFractions";
    case ErrorCode::ClassAbsent: return "ClassAbsent";
    case ErrorCode::NoCategories: return "NoCategories";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SingularScatter: return "SingularScatter";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::TraceMismatch: return "TraceMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::TooManyFeatures: return "TooManyFeatures";
    case ErrorCode::BadIndex: return "BadIndex";
    case ErrorCode::UndefinedMetric: return "UndefinedMetric";
    case ErrorCode::SingleClass: return "SingleClass";
  }
  return "Unknown";
}

/// Every library failure surfaces as an Error; `code` is the stable contract,
/// the message carries context (row/column indices, names, limits).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace elai
