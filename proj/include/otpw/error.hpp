#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace otpw {

enum class ErrorCode {
  NonConvex,
  Degenerate,
  ResolutionTooLow,
  InvalidArgument,
  ZeroMass,
  OneSigned,
  DimensionMismatch,
  TooLarge,
  Infeasible,
  NoConvergence,
  BadTime,
  DegenerateCDF,
  ConstraintViolated,
  ConfigInvalid,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConvex: return "NonConvex";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::ResolutionTooLow: return "ResolutionTooLow";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroMass: return "ZeroMass";
    case ErrorCode::OneSigned: return "OneSigned";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BadTime: return "BadTime";
    case ErrorCode::DegenerateCDF: return "DegenerateCDF";
    case ErrorCode::ConstraintViolated: return "ConstraintViolated";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

}  // namespace otpw
