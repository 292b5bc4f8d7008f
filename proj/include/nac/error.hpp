#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nac {

/// Failure categories. The CLI maps these onto exit codes and the
/// `kind` field of its machine-readable error record.
enum class ErrorKind {
  invalid_argument,
  shape_mismatch,
  role_mismatch,
  input_not_found,
  unknown_format,
  truncated_file,
  unsupported_bit_depth,
  io_failure,
  non_finite,
  divergence,
  missing_activations,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace nac
