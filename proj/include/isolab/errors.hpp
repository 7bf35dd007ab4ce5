#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace isolab {

enum class ErrorCode {
  DimensionUnsupported,
  SingularMatrix,
  ZeroBase,
  PoleCollision,
  ClearanceViolation,
  StepUnderflow,
  ShapeMismatch,
  ReducibleSystem,
  LoopTooClose,
  DegenerateConfiguration,
  BlowupDetected,
  NotCommuting,
  DegenerateLeading,
  InfiniteU,
  Ambiguous,
  RootCollision,
  RootOnPole,
  SingularSample,
  NoBlowup,
  InvalidArgument,
  InvalidConfig,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionUnsupported: return "DIMENSION_UNSUPPORTED";
    case ErrorCode::SingularMatrix: return "SINGULAR_MATRIX";
    case ErrorCode::ZeroBase: return "ZERO_BASE";
    case ErrorCode::PoleCollision: return "POLE_COLLISION";
    case ErrorCode::ClearanceViolation: return "CLEARANCE_VIOLATION";
    case ErrorCode::StepUnderflow: return "STEP_UNDERFLOW";
    case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::ReducibleSystem: return "REDUCIBLE_SYSTEM";
    case ErrorCode::LoopTooClose: return "LOOP_TOO_CLOSE";
    case ErrorCode::DegenerateConfiguration: return "DEGENERATE_CONFIGURATION";
    case ErrorCode::BlowupDetected: return "BLOWUP_DETECTED";
    case ErrorCode::NotCommuting: return "NOT_COMMUTING";
    case ErrorCode::DegenerateLeading: return "DEGENERATE_LEADING";
    case ErrorCode::InfiniteU: return "INFINITE_U";
    case ErrorCode::Ambiguous: return "AMBIGUOUS";
    case ErrorCode::RootCollision: return "ROOT_COLLISION";
    case ErrorCode::RootOnPole: return "ROOT_ON_POLE";
    case ErrorCode::SingularSample: return "SINGULAR_SAMPLE";
    case ErrorCode::NoBlowup: return "NO_BLOWUP";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::Io: return "IO_ERROR";
  }
  return "UNKNOWN";
}

/// Exception carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace isolab
