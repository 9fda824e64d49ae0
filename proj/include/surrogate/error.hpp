#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace surrogate {

enum class ErrorKind {
  InvalidGraph,
  UnknownVertex,
  MissingEdge,
  OverlappingSets,
  MalformedRoles,
  UnknownLabel,
  InvalidCovariance,
  SingularMatrix,
  DegenerateVariance,
  NonFactorizable,
  NearZeroConcentration,
  ModelMisfit,
  EmptyPivot,
  CriterionNotSatisfied,
  NotStandardized,
  DegenerateDenominator,
  InvalidModel,
  SampleTooSmall,
  Parse,
};

std::string_view to_string(ErrorKind kind);

// Every failure in the library is reported through this type; `kind()` is the
// machine-readable tag and what() carries the human detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
        kind_(kind),
        detail_(detail) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace surrogate
