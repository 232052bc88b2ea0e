#pragma once

#include <stdexcept>
#include <string>

namespace aucshift {

// Every failure mode the library reports. Codes group into two CLI exit
// classes: input/contract violations (exit 2) and numerical failures (exit 3).
enum class ErrorCode {
  // input / contract
  MissingColumn,
  BadValue,
  EmptyCohort,
  DegenerateResponse,
  SchemaMismatch,
  DimensionMismatch,
  MissingSummary,
  RequirementUnmet,
  IndexOutOfRange,
  GroupTooSmall,
  BadConfig,
  // numerical
  InfeasibleTarget,
  MaxIterations,
  NumericalBreakdown,
  SeparationDetected,
  SingularDesign,
  NonFiniteWeight,
  RankDeficientDesign,
  DegenerateVariance,
  NoPairs,
  TooManyFailures,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::BadValue: return "BadValue";
    case ErrorCode::EmptyCohort: return "EmptyCohort";
    case ErrorCode::DegenerateResponse: return "DegenerateResponse";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingSummary: return "MissingSummary";
    case ErrorCode::RequirementUnmet: return "RequirementUnmet";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::InfeasibleTarget: return "InfeasibleTarget";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::SeparationDetected: return "SeparationDetected";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::NonFiniteWeight: return "NonFiniteWeight";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::NoPairs: return "NoPairs";
    case ErrorCode::TooManyFailures: return "TooManyFailures";
  }
  return "Unknown";
}

// True for codes caused by bad inputs/configuration rather than numerics.
inline bool is_input_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::MissingColumn:
    case ErrorCode::BadValue:
    case ErrorCode::EmptyCohort:
    case ErrorCode::DegenerateResponse:
    case ErrorCode::SchemaMismatch:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::MissingSummary:
    case ErrorCode::RequirementUnmet:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::GroupTooSmall:
    case ErrorCode::BadConfig:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace aucshift
