#pragma once

#include <stdexcept>
#include <string>

namespace fidfac {

enum class ErrorCode {
  NotPositiveDefinite,
  InvalidDegreesOfFreedom,
  EmptyInput,
  LengthMismatch,
  InsufficientReplication,
  SingularDesign,
  SchemaError,
  NonPositiveConcentration,
  SingularJacobian,
  ChainInitializationFailed,
  EmptyChain,
  DegenerateSample,
  EmptyClass,
  InsufficientData,
  EmptyResults,
  ConfigError,
  InvalidArgument,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fidfac
