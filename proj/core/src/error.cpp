#include "socratic/error.hpp"

namespace socratic {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_exercise: return "unknown_exercise";
    case ErrorCode::empty_content: return "empty_content";
    case ErrorCode::alternation_violation: return "alternation_violation";
    case ErrorCode::session_closed: return "session_closed";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::backend_unavailable: return "backend_unavailable";
    case ErrorCode::mock_exhausted: return "mock_exhausted";
    case ErrorCode::mock_mismatch: return "mock_mismatch";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::unknown_step_tag: return "unknown_step_tag";
    case ErrorCode::missing_problem_statement: return "missing_problem_statement";
    case ErrorCode::unreadable_root: return "unreadable_root";
    case ErrorCode::unknown_path: return "unknown_path";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::corrupt_record: return "corrupt_record";
    case ErrorCode::busy: return "busy";
    case ErrorCode::config_error: return "config_error";
  }
  return "unknown";
}

}  // namespace socratic
