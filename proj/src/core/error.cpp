#include "core/error.hpp"

namespace mc {

const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Index: return "index out of range";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::DegenerateGeometry: return "degenerate geometry";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Consistency: return "consistency error";
    case ErrorKind::UnsupportedVersion: return "unsupported version";
    case ErrorKind::UndefinedMetric: return "undefined metric";
    case ErrorKind::Generation: return "generation failure";
  }
  return "unknown error";
}

}  // namespace mc
