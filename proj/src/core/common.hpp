#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace amf {

// One exception type for the whole core; the kind maps 1:1 onto the C API
// status codes.
enum class ErrorKind {
  InvalidArgument,  // bad parameters, config violations
  Parse,            // malformed input files (carries line numbers)
  Data,             // referential/consistency problems in loaded data
  Numeric,          // rank deficiency, non-convergence, degenerate tests
  Io,               // filesystem failures
  Internal,         // bugs
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Data: return "data";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Io: return "io";
    case ErrorKind::Internal: return "internal";
  }
  return "unknown";
}

}  // namespace amf
