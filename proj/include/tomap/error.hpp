#pragma once

#include <stdexcept>
#include <string>

namespace tomap {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveDepth,
  InvalidConvexWeights,
  DegenerateBox,
  AllZeroWeights,
  SingularCovariance,
  DegeneratePoints,
  EmptyPolygon,
  TargetAboveSearchPlane,
  InvalidScanGeometry,
  UnknownTarget,
  ScenarioInvalid,
};

const char* to_string(ErrorCode code) noexcept;

/// Library-wide exception. Callers that care about the failure kind switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tomap
