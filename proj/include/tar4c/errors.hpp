#pragma once

#include <stdexcept>
#include <string>

namespace tar4c {

/// Coarse failure category; the CLI maps these onto process exit codes.
enum class ErrorCategory { Config, Data, Numeric };

/// Specific failure conditions raised across the library.
enum class ErrorCode {
  MissingColumn,
  NonNumericCell,
  EmptyFile,
  OutOfRange,
  EpochTooShort,
  SeriesTooShort,
  TooShort,
  ZeroVarianceChannel,
  EigenFailure,
  RankDeficientDesign,
  AllColumnsDropped,
  RegimeTooSmall,
  NoFeasibleSplit,
  ZeroResidual,
  EmptyGrid,
  EmptyList,
  DimensionMismatch,
  InconsistentSubjectSets,
  UnknownFormat,
  NonFiniteSample,
  BadConfig,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, ErrorCategory category, const std::string& what)
      : std::runtime_error(what), code_(code), category_(category) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCode code_;
  ErrorCategory category_;
};

inline Error config_error(ErrorCode code, const std::string& what) {
  return Error(code, ErrorCategory::Config, what);
}
inline Error data_error(ErrorCode code, const std::string& what) {
  return Error(code, ErrorCategory::Data, what);
}
inline Error numeric_error(ErrorCode code, const std::string& what) {
  return Error(code, ErrorCategory::Numeric, what);
}

}  // namespace tar4c
