#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kcontract {

enum class ErrorKind {
  // input errors
  NonpositiveCoefficient,
  BadNormalization,
  BadParameter,
  HorizonTooShort,
  DimensionMismatch,
  CommutativityViolation,
  DegreeOverflow,
  KernelSingularity,
  SchemaError,
  // numerical non-convergence
  SeriesNotConverged,
  SpectralUnsafe,
  IsometryDegraded,
  MembershipAmbiguous,
  // verdict failures
  NotPositive,
  NotPure,
  NotMinimal,
  IrreconcilableDilations,
  NotRowContraction,
};

std::string_view to_string(ErrorKind kind);

/// Process exit code associated with an error kind (3 = input, 4 = numerical, 2 = verdict).
int exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace kcontract
