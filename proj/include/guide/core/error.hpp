#ifndef GUIDE_CORE_ERROR_HPP_
#define GUIDE_CORE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace guide {

// Failure categories shared by every module. The C API maps these one-to-one
// onto guide_status codes.
enum class ErrorCode {
  kInvalidArgument,
  kEmptyTask,
  kUnknownSymbol,
  kNoObjective,
  kZeroVector,
  kFormat,
  kMissingKey,
  kDimensionMismatch,
  kGridMismatch,
  kDegenerateSystem,
  kInvalidConfig,
  kNotReset,
  kShapeMismatch,
  kNonFiniteGradient,
  kNoSafePath,
  kEmptyLogs,
  kIo,
  kRuntime,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace guide

#endif  // GUIDE_CORE_ERROR_HPP_
