#pragma once

#include <stdexcept>
#include <string>

namespace gfol {

/// Failure taxonomy shared by the library and the CLI.
enum class ErrorCode {
  ParseError,
  ValidationError,
  DegenerateMetric,
  UnknownModel,
  BadParams,
  NotCompatible,
  KindMismatch,
  NonCommuting,
  SingularQ,
  NotSkewInFrame,
  SingularMetric,
  NotPositive,
  PositivityLost,
  NotConverged,
  PoleReached,
  BlowupDetected,
  InsufficientSamples,
  UsageError,
  IoError,
};

inline const char* code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::DegenerateMetric: return "DegenerateMetric";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::NotCompatible: return "NotCompatible";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::NonCommuting: return "NonCommuting";
    case ErrorCode::SingularQ: return "SingularQ";
    case ErrorCode::NotSkewInFrame: return "NotSkewInFrame";
    case ErrorCode::SingularMetric: return "SingularMetric";
    case ErrorCode::NotPositive: return "NotPositive";
    case ErrorCode::PositivityLost: return "PositivityLost";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::PoleReached: return "PoleReached";
    case ErrorCode::BlowupDetected: return "BlowupDetected";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Error";
}

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace gfol
