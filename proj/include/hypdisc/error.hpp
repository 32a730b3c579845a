#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hypdisc {

enum class ErrorCode {
  NonFiniteEntries,
  ComplexEigenvalues,
  RepeatedEigenvalues,
  IllConditionedEigenvectors,
  EvaluationOnInterfaceWithoutSide,
  CharacteristicTrappedAtInterface,
  IntegratorFailure,
  NoSuchCrossing,
  ZeroSpeed,
  MixedSignFamily,
  MissingTraces,
  QuadratureFailure,
  DifferentiationAcrossInterface,
  NonContraction,
  NoConvergence,
  GridMismatch,
  InterfaceNotOnGridFace,
  CFLViolation,
  AssumptionViolation,
  InvalidArgument,
  IncompatibleMode,
  InterfaceConditionViolated,
};

/// Stable identifier used in summaries and log output.
constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteEntries: return "NonFiniteEntries";
    case ErrorCode::ComplexEigenvalues: return "ComplexEigenvalues";
    case ErrorCode::RepeatedEigenvalues: return "RepeatedEigenvalues";
    case ErrorCode::IllConditionedEigenvectors: return "IllConditionedEigenvectors";
    case ErrorCode::EvaluationOnInterfaceWithoutSide: return "EvaluationOnInterfaceWithoutSide";
    case ErrorCode::CharacteristicTrappedAtInterface: return "CharacteristicTrappedAtInterface";
    case ErrorCode::IntegratorFailure: return "IntegratorFailure";
    case ErrorCode::NoSuchCrossing: return "NoSuchCrossing";
    case ErrorCode::ZeroSpeed: return "ZeroSpeed";
    case ErrorCode::MixedSignFamily: return "MixedSignFamily";
    case ErrorCode::MissingTraces: return "MissingTraces";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::DifferentiationAcrossInterface: return "DifferentiationAcrossInterface";
    case ErrorCode::NonContraction: return "NonContraction";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::InterfaceNotOnGridFace: return "InterfaceNotOnGridFace";
    case ErrorCode::CFLViolation: return "CFLViolation";
    case ErrorCode::AssumptionViolation: return "AssumptionViolation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IncompatibleMode: return "IncompatibleMode";
    case ErrorCode::InterfaceConditionViolated: return "InterfaceConditionViolated";
  }
  return "Unknown";
}

/// All solver failures are reported through this exception; `code()` names the
/// failure class, `what()` carries the detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hypdisc
