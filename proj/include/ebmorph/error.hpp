#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ebmorph {

enum class ErrorKind {
  FileNotFound,
  FormatError,
  EmptyCurve,
  InvalidPeriod,
  NonPositiveMax,
  NonPositiveQ,
  InvalidPotential,
  InvalidParams,
  TooManyOutliers,
  TargetExceedsLength,
  ShapeMismatch,
  ArchMismatch,
  DegenerateDataset,
  LengthMismatch,
  EmptyCounts,
  SingleClass,
  IoError,
  InvalidSpec,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this one exception type so that
// callers (and tests) can branch on kind() without a class hierarchy.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ebmorph
