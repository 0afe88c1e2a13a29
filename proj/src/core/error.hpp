#pragma once

#include <stdexcept>
#include <string>

namespace mc {

// Every failure raised by the core carries one of these kinds; the C API maps
// them one-to-one onto mc_status codes.
enum class ErrorKind {
  InvalidArgument,
  Index,
  Parse,
  Validation,
  Io,
  DegenerateGeometry,
  InsufficientData,
  Consistency,
  UnsupportedVersion,
  UndefinedMetric,
  Generation,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

const char* error_kind_name(ErrorKind kind) noexcept;

}  // namespace mc
