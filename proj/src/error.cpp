#include "ebmorph/error.hpp"

namespace ebmorph {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::EmptyCurve: return "EmptyCurve";
    case ErrorKind::InvalidPeriod: return "InvalidPeriod";
    case ErrorKind::NonPositiveMax: return "NonPositiveMax";
    case ErrorKind::NonPositiveQ: return "NonPositiveQ";
    case ErrorKind::InvalidPotential: return "InvalidPotential";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::TooManyOutliers: return "TooManyOutliers";
    case ErrorKind::TargetExceedsLength: return "TargetExceedsLength";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ArchMismatch: return "ArchMismatch";
    case ErrorKind::DegenerateDataset: return "DegenerateDataset";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyCounts: return "EmptyCounts";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace ebmorph
