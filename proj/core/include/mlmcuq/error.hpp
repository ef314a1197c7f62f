#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mlmcuq {

/// Named failure conditions raised by the library. Every module reports
/// through `Error`, so callers can switch on the code without string matching.
enum class ErrorCode {
  // param-space
  EmptySequence,
  InvalidRadius,
  InvalidDecay,
  InvalidParameter,
  // geometry-map
  UndefinedDirection,
  NonSmoothPoint,
  DegenerateMap,
  OutsideMappedRegion,
  InvalidGeometry,
  // model-1d
  NearResonance,
  IndefiniteForm,
  PointOutOfDomain,
  InvalidProblem,
  // mie-2d
  ModeResonance,
  InvalidScatterer,
  // estimators
  TooFewSamples,
  FitDegenerate,
  RateHypothesisViolated,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Module that owns a given error code ("param-space", "estimators", ...).
std::string_view module_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mlmcuq
