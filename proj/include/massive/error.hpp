#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace massive {

enum class ErrorKind {
  invalid_parameter,
  insufficient_data,
  dimension_mismatch,
  representation_mismatch,
  injectivity,
  singularity,
  step_rejected,
  validity,
  size_limit,
  convergence,
  not_applicable,
  unbalanced,
  io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::representation_mismatch: return "representation-mismatch";
    case ErrorKind::injectivity: return "injectivity";
    case ErrorKind::singularity: return "singularity";
    case ErrorKind::step_rejected: return "step-rejected";
    case ErrorKind::validity: return "validity";
    case ErrorKind::size_limit: return "size-limit";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::not_applicable: return "not-applicable";
    case ErrorKind::unbalanced: return "unbalanced";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace massive
