#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace socratic {

/// Machine-readable failure categories. The string form (see to_string) is
/// what shows up in API error bodies and CLI diagnostics.
enum class ErrorCode {
  unknown_exercise,
  empty_content,
  alternation_violation,
  session_closed,
  invalid_argument,
  backend_unavailable,
  mock_exhausted,
  mock_mismatch,
  parse_error,
  unknown_step_tag,
  missing_problem_statement,
  unreadable_root,
  unknown_path,
  not_found,
  io_error,
  corrupt_record,
  busy,
  config_error,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures raised by an LLM backend (http or mock).
  bool is_backend_error() const noexcept {
    return code_ == ErrorCode::backend_unavailable ||
           code_ == ErrorCode::mock_exhausted ||
           code_ == ErrorCode::mock_mismatch;
  }

 private:
  ErrorCode code_;
};

}  // namespace socratic
