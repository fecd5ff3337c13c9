#include "guide/core/error.hpp"

namespace guide {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyTask: return "EmptyTask";
    case ErrorCode::kUnknownSymbol: return "UnknownSymbol";
    case ErrorCode::kNoObjective: return "NoObjective";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kMissingKey: return "MissingKey";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kDegenerateSystem: return "DegenerateSystem";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kNotReset: return "NotReset";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kNoSafePath: return "NoSafePath";
    case ErrorCode::kEmptyLogs: return "EmptyLogs";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kRuntime: return "RuntimeError";
  }
  return "Unknown";
}

}  // namespace guide
