#include "mcinr/error.hpp"

namespace mcinr {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedDatatype: return "UnsupportedDatatype";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::DegenerateDomain: return "DegenerateDomain";
    case ErrorCode::ConstantVolume: return "ConstantVolume";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DimsMismatch: return "DimsMismatch";
    case ErrorCode::VolumeTooSmall: return "VolumeTooSmall";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::NonFiniteUpdate: return "NonFiniteUpdate";
    case ErrorCode::StepOutOfRange: return "StepOutOfRange";
    case ErrorCode::NonIntegralFactor: return "NonIntegralFactor";
  }
  return "Unknown";
}

}  // namespace mcinr
