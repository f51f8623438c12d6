#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gxstpir {

enum class ErrorCode {
  // ff
  NotPrime,
  FieldMismatch,
  ZeroInverse,
  Singular,
  DimensionMismatch,
  // model
  EmptyReplication,
  DuplicateServer,
  ServerOutOfRange,
  MessageLost,
  DegenerateCapacity,
  // grscoef
  FieldTooSmall,
  InsufficientPoints,
  // scheme
  ComputeModeUnavailable,
  ZeroNormalizer,
  SingularDecode,
  PreconditionViolated,
  // capacity
  SearchTooLarge,
  GraphTooLarge,
  Infeasible,
  // verify
  BudgetExceeded,
  // plumbing
  InvalidArgument,
  Parse,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPrime: return "NotPrime";
    case ErrorCode::FieldMismatch: return "FieldMismatch";
    case ErrorCode::ZeroInverse: return "ZeroInverse";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyReplication: return "EmptyReplication";
    case ErrorCode::DuplicateServer: return "DuplicateServer";
    case ErrorCode::ServerOutOfRange: return "ServerOutOfRange";
    case ErrorCode::MessageLost: return "MessageLost";
    case ErrorCode::DegenerateCapacity: return "DegenerateCapacity";
    case ErrorCode::FieldTooSmall: return "FieldTooSmall";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::ComputeModeUnavailable: return "ComputeModeUnavailable";
    case ErrorCode::ZeroNormalizer: return "ZeroNormalizer";
    case ErrorCode::SingularDecode: return "SingularDecode";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::SearchTooLarge: return "SearchTooLarge";
    case ErrorCode::GraphTooLarge: return "GraphTooLarge";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void enforce(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace gxstpir
