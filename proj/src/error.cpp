#include "adgnn/error.hpp"

namespace adgnn {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NonScalarLoss: return "NonScalarLoss";
    case ErrorKind::MissingGrad: return "MissingGrad";
    case ErrorKind::ZeroNormRow: return "ZeroNormRow";
    case ErrorKind::NumericCheckFailed: return "NumericCheckFailed";
    case ErrorKind::NoParticipantLines: return "NoParticipantLines";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::MultipleRoots: return "MultipleRoots";
    case ErrorKind::NoRoot: return "NoRoot";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::DuplicateToken: return "DuplicateToken";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::MalformedManifest: return "MalformedManifest";
    case ErrorKind::MissingFeature: return "MissingFeature";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::RowCountMismatch: return "RowCountMismatch";
    case ErrorKind::AlignmentMismatch: return "AlignmentMismatch";
    case ErrorKind::NegativeEntry: return "NegativeEntry";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::NegativeAdjacency: return "NegativeAdjacency";
    case ErrorKind::EmptyGraph: return "EmptyGraph";
    case ErrorKind::BadLabel: return "BadLabel";
    case ErrorKind::UnknownBaseId: return "UnknownBaseId";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "UnknownError";
}

bool is_numeric_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFinite:
    case ErrorKind::NonScalarLoss:
    case ErrorKind::MissingGrad:
    case ErrorKind::ZeroNormRow:
    case ErrorKind::NumericCheckFailed:
      return true;
    default:
      return false;
  }
}

}  // namespace adgnn
