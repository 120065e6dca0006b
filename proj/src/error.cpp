#include "tomap/error.hpp"

namespace tomap {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::InvalidConvexWeights: return "InvalidConvexWeights";
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::AllZeroWeights: return "AllZeroWeights";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::DegeneratePoints: return "DegeneratePoints";
    case ErrorCode::EmptyPolygon: return "EmptyPolygon";
    case ErrorCode::TargetAboveSearchPlane: return "TargetAboveSearchPlane";
    case ErrorCode::InvalidScanGeometry: return "InvalidScanGeometry";
    case ErrorCode::UnknownTarget: return "UnknownTarget";
    case ErrorCode::ScenarioInvalid: return "ScenarioInvalid";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace tomap
