#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fidmag {

/// Failure classes raised by the library. The CLI maps these onto exit codes:
/// validation-type errors (domain, range, validation, io) exit 2, numeric and
/// estimation failures exit 3.
enum class ErrorKind {
  kDomain,
  kRange,
  kNumeric,
  kSingularity,
  kCalibration,
  kInfeasible,
  kConditioning,
  kFilterDesign,
  kEdge,
  kUnwrap,
  kValidation,
  kIo,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

// Literal messages only become strings on failure (hot paths call this).
inline void require(bool condition, ErrorKind kind, const char* what) {
  if (!condition) fail(kind, what);
}

}  // namespace fidmag
