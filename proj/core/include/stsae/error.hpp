#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stsae {

enum class ErrorCode {
  // input and data problems
  UnknownArea,
  IslandArea,
  SelfLoop,
  DimensionMismatch,
  ParseError,
  CovariateGap,
  NonNumeric,
  InvalidConfig,
  InvalidSpec,
  IntensityExceedsPopulation,
  MisalignedDraws,
  DegenerateTime,
  NoValidReplicates,
  IoError,
  // numerical failures
  EigenFailure,
  NonPositiveFactor,
  CholeskyFailure,
};

enum class ErrorCategory { Usage, Data, Numerical };

std::string_view to_string(ErrorCode code);
ErrorCategory category(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace stsae
