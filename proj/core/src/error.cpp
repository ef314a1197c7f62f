#include "mlmcuq/error.hpp"

namespace mlmcuq {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::InvalidRadius: return "InvalidRadius";
    case ErrorCode::InvalidDecay: return "InvalidDecay";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::UndefinedDirection: return "UndefinedDirection";
    case ErrorCode::NonSmoothPoint: return "NonSmoothPoint";
    case ErrorCode::DegenerateMap: return "DegenerateMap";
    case ErrorCode::OutsideMappedRegion: return "OutsideMappedRegion";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::NearResonance: return "NearResonance";
    case ErrorCode::IndefiniteForm: return "IndefiniteForm";
    case ErrorCode::PointOutOfDomain: return "PointOutOfDomain";
    case ErrorCode::InvalidProblem: return "InvalidProblem";
    case ErrorCode::ModeResonance: return "ModeResonance";
    case ErrorCode::InvalidScatterer: return "InvalidScatterer";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::FitDegenerate: return "FitDegenerate";
    case ErrorCode::RateHypothesisViolated: return "RateHypothesisViolated";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string_view module_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptySequence:
    case ErrorCode::InvalidRadius:
    case ErrorCode::InvalidDecay:
    case ErrorCode::InvalidParameter:
      return "param-space";
    case ErrorCode::UndefinedDirection:
    case ErrorCode::NonSmoothPoint:
    case ErrorCode::DegenerateMap:
    case ErrorCode::OutsideMappedRegion:
    case ErrorCode::InvalidGeometry:
      return "geometry-map";
    case ErrorCode::NearResonance:
    case ErrorCode::IndefiniteForm:
    case ErrorCode::PointOutOfDomain:
    case ErrorCode::InvalidProblem:
      return "model-1d";
    case ErrorCode::ModeResonance:
    case ErrorCode::InvalidScatterer:
      return "mie-2d";
    case ErrorCode::TooFewSamples:
    case ErrorCode::FitDegenerate:
    case ErrorCode::RateHypothesisViolated:
    case ErrorCode::InvalidArgument:
      return "estimators";
  }
  return "unknown";
}

}  // namespace mlmcuq
