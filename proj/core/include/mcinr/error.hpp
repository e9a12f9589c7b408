#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcinr {

enum class ErrorCode {
  InvalidArgument,
  MalformedHeader,
  UnsupportedDatatype,
  TruncatedData,
  IoFailure,
  DegenerateDomain,
  ConstantVolume,
  GridTooLarge,
  ShapeMismatch,
  DimsMismatch,
  VolumeTooSmall,
  NonFiniteLoss,
  NonFiniteUpdate,
  StepOutOfRange,
  NonIntegralFactor,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the engine carries one of the codes above so that
/// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace mcinr
