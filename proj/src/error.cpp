#include "surrogate/error.hpp"

namespace surrogate {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGraph: return "InvalidGraph";
    case ErrorKind::UnknownVertex: return "UnknownVertex";
    case ErrorKind::MissingEdge: return "MissingEdge";
    case ErrorKind::OverlappingSets: return "OverlappingSets";
    case ErrorKind::MalformedRoles: return "MalformedRoles";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::InvalidCovariance: return "InvalidCovariance";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::NonFactorizable: return "NonFactorizable";
    case ErrorKind::NearZeroConcentration: return "NearZeroConcentration";
    case ErrorKind::ModelMisfit: return "ModelMisfit";
    case ErrorKind::EmptyPivot: return "EmptyPivot";
    case ErrorKind::CriterionNotSatisfied: return "CriterionNotSatisfied";
    case ErrorKind::NotStandardized: return "NotStandardized";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::SampleTooSmall: return "SampleTooSmall";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace surrogate
