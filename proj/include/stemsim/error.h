#pragma once

#include <stdexcept>
#include <string>

namespace stemsim {

enum class ErrorKind {
  io,
  format,
  sample_rate_mismatch,
  empty_result,
  invalid_argument,
  dimension_mismatch,
  precondition,
  not_found,
  degenerate,
  construction_failure,
  config,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library. The kind drives CLI exit codes and
// lets tests assert on the failure class without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace stemsim
