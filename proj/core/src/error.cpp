#include "stsae/error.hpp"

namespace stsae {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownArea: return "UnknownArea";
    case ErrorCode::IslandArea: return "IslandArea";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::CovariateGap: return "CovariateGap";
    case ErrorCode::NonNumeric: return "NonNumeric";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::IntensityExceedsPopulation: return "IntensityExceedsPopulation";
    case ErrorCode::MisalignedDraws: return "MisalignedDraws";
    case ErrorCode::DegenerateTime: return "DegenerateTime";
    case ErrorCode::NoValidReplicates: return "NoValidReplicates";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::NonPositiveFactor: return "NonPositiveFactor";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidSpec:
      return ErrorCategory::Usage;
    case ErrorCode::EigenFailure:
    case ErrorCode::NonPositiveFactor:
    case ErrorCode::CholeskyFailure:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Data;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace stsae
