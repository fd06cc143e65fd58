#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bandedge {

enum class ErrorCode {
  InvalidArgument,
  BumpOutsideCell,
  EmptySpec,
  ExplosionGuard,
  PeriodMismatch,
  IncompatibleDimensions,
  SizeMismatch,
  NonFiniteEntry,
  ConvergenceFailure,
  FlatBandSuspected,
  DegenerateMinimum,
  SandwichViolation,
  MismatchedModel,
  NotDefiniteAtZero,
  NotApplicable,
  NotFixedSign,
  GapTooSmall,
  ConfigError,
  MissingUpstream,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BumpOutsideCell: return "BumpOutsideCell";
    case ErrorCode::EmptySpec: return "EmptySpec";
    case ErrorCode::ExplosionGuard: return "ExplosionGuard";
    case ErrorCode::PeriodMismatch: return "PeriodMismatch";
    case ErrorCode::IncompatibleDimensions: return "IncompatibleDimensions";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::FlatBandSuspected: return "FlatBandSuspected";
    case ErrorCode::DegenerateMinimum: return "DegenerateMinimum";
    case ErrorCode::SandwichViolation: return "SandwichViolation";
    case ErrorCode::MismatchedModel: return "MismatchedModel";
    case ErrorCode::NotDefiniteAtZero: return "NotDefiniteAtZero";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::NotFixedSign: return "NotFixedSign";
    case ErrorCode::GapTooSmall: return "GapTooSmall";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingUpstream: return "MissingUpstream";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (and tests) can dispatch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix that what() carries.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace bandedge
