#pragma once

#include <stdexcept>
#include <string>

namespace adgnn {

enum class ErrorKind {
  // numeric core
  ShapeMismatch,
  NonFinite,
  NonScalarLoss,
  MissingGrad,
  ZeroNormRow,
  NumericCheckFailed,
  // parsing / ingestion
  NoParticipantLines,
  MalformedRow,
  MultipleRoots,
  NoRoot,
  DimensionMismatch,
  DuplicateId,
  DuplicateToken,
  MissingFile,
  MalformedManifest,
  MissingFeature,
  IoError,
  // graph / layers
  RowCountMismatch,
  AlignmentMismatch,
  NegativeEntry,
  SizeMismatch,
  NegativeAdjacency,
  EmptyGraph,
  // losses / harness
  BadLabel,
  UnknownBaseId,
  TooFewSamples,
  EmptySplit,
  InvalidConfig,
};

const char* error_kind_name(ErrorKind kind);

/// Returns true for failures of the numeric core (maps to CLI exit code 3);
/// everything else is a configuration/validation error (exit code 2).
bool is_numeric_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace adgnn
