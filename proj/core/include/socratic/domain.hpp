#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "socratic/json_enum.hpp"

namespace socratic {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

Timestamp now_utc();
std::string format_timestamp(Timestamp ts);
/// Parses "YYYY-MM-DDTHH:MM:SS(.mmm)Z"; throws Error(parse_error) otherwise.
Timestamp parse_timestamp(std::string_view text);

enum class Role { student, tutor, system };

struct Message {
  Role role = Role::student;
  std::string content;
  Timestamp timestamp{};
  std::uint64_t sequence = 0;

  friend bool operator==(const Message&, const Message&) = default;
};

enum class SessionState { active, closed };

struct Session {
  std::string session_id;
  std::string exercise_id;
  std::string student_id;
  std::vector<Message> messages;
  Timestamp created_at{};
  SessionState state = SessionState::active;

  friend bool operator==(const Session&, const Session&) = default;
};

/// Hint concreteness ladder. L3 names the relevant construct, L2 gives a
/// single clue or counter-question, L1 only points back at the problem
/// statement. Refinement walks downward and never climbs back up.
enum class AssistanceLevel { L1 = 1, L2 = 2, L3 = 3 };

/// One step down the ladder, saturating at L1.
constexpr AssistanceLevel lower(AssistanceLevel level) {
  return level == AssistanceLevel::L3   ? AssistanceLevel::L2
         : level == AssistanceLevel::L2 ? AssistanceLevel::L1
                                        : AssistanceLevel::L1;
}

enum class StepTag { relevance, file_selection, generation, self_check };

std::string_view to_string(StepTag tag);
std::optional<StepTag> parse_step_tag(std::string_view text);

enum class Backend { http, mock };

enum class Violation { code_block, pseudocode_or_steps, solution_reveal, empty_or_garbled };

std::string_view to_string(Violation v);

enum class VerdictSource { static_scan, llm_self_check, both };

struct GuardrailVerdict {
  bool passed = true;
  std::set<Violation> violations;
  VerdictSource source = VerdictSource::static_scan;

  static GuardrailVerdict pass(VerdictSource source) { return {true, {}, source}; }
  static GuardrailVerdict fail(std::set<Violation> violations, VerdictSource source) {
    return {false, std::move(violations), source};
  }

  friend bool operator==(const GuardrailVerdict&, const GuardrailVerdict&) = default;
};

struct Draft {
  std::string text;
  GuardrailVerdict verdict;
  AssistanceLevel assistance_level = AssistanceLevel::L3;

  friend bool operator==(const Draft&, const Draft&) = default;
};

/// Trace-sized view of one LLM exchange. The full prompt is not kept; its
/// rendered size is.
struct LlmCallSummary {
  StepTag step_tag = StepTag::relevance;
  Backend backend = Backend::mock;
  std::string completion;
  std::int64_t latency_ms = 0;
  std::size_t prompt_chars = 0;

  friend bool operator==(const LlmCallSummary&, const LlmCallSummary&) = default;
};

enum class Outcome { rejected_off_topic, answered, fallback };

std::string_view to_string(Outcome o);

struct PipelineTrace {
  std::uint64_t message_sequence = 0;
  std::optional<int> relevance_score;
  bool gated = false;
  std::vector<std::string> selected_files;
  bool build_log_requested = false;
  std::vector<Draft> drafts;
  int refinement_count = 0;
  std::vector<LlmCallSummary> llm_calls;
  Outcome outcome = Outcome::fallback;
  std::vector<std::string> warnings;
  /// Set when a backend failure cut the pipeline short.
  std::optional<std::string> error;

  friend bool operator==(const PipelineTrace&, const PipelineTrace&) = default;
};

/// Lists every violated trace invariant; empty means the trace is well formed.
std::vector<std::string> check_trace_invariants(const PipelineTrace& trace, int max_refinements,
                                                int relevance_threshold = 5);

/// Identifiers double as file and directory names, so they are restricted to
/// [A-Za-z0-9._-] and may not be "." or "..".
bool is_valid_identifier(std::string_view id);

std::string generate_session_id();

/// Fresh active session with no messages. Fixture existence is the caller's
/// precondition (see TutorService::create_session).
Session create_session(const std::string& exercise_id, const std::string& student_id,
                       Timestamp created_at = now_utc());

/// Returns a copy of `session` with one more message. Sessions are append-only.
Session append_message(const Session& session, Role role, std::string_view content,
                       Timestamp at = now_utc());

std::string_view trim(std::string_view text);

// Canonical JSON encodings (lower_snake_case field names).
void to_json(nlohmann::json& j, const Message& m);
void from_json(const nlohmann::json& j, Message& m);
void to_json(nlohmann::json& j, const Session& s);
void from_json(const nlohmann::json& j, Session& s);
void to_json(nlohmann::json& j, const GuardrailVerdict& v);
void from_json(const nlohmann::json& j, GuardrailVerdict& v);
void to_json(nlohmann::json& j, const Draft& d);
void from_json(const nlohmann::json& j, Draft& d);
void to_json(nlohmann::json& j, const LlmCallSummary& c);
void from_json(const nlohmann::json& j, LlmCallSummary& c);
void to_json(nlohmann::json& j, const PipelineTrace& t);
void from_json(const nlohmann::json& j, PipelineTrace& t);

SOCRATIC_STRICT_JSON_ENUM(Role, {{Role::student, "student"},
                                    {Role::tutor, "tutor"},
                                    {Role::system, "system"}})
SOCRATIC_STRICT_JSON_ENUM(SessionState, {{SessionState::active, "active"},
                                            {SessionState::closed, "closed"}})
SOCRATIC_STRICT_JSON_ENUM(AssistanceLevel, {{AssistanceLevel::L1, "L1"},
                                               {AssistanceLevel::L2, "L2"},
                                               {AssistanceLevel::L3, "L3"}})
SOCRATIC_STRICT_JSON_ENUM(StepTag, {{StepTag::relevance, "relevance"},
                                       {StepTag::file_selection, "file_selection"},
                                       {StepTag::generation, "generation"},
                                       {StepTag::self_check, "self_check"}})
SOCRATIC_STRICT_JSON_ENUM(Backend, {{Backend::http, "http"}, {Backend::mock, "mock"}})
SOCRATIC_STRICT_JSON_ENUM(Violation, {{Violation::code_block, "code_block"},
                                         {Violation::pseudocode_or_steps, "pseudocode_or_steps"},
                                         {Violation::solution_reveal, "solution_reveal"},
                                         {Violation::empty_or_garbled, "empty_or_garbled"}})
SOCRATIC_STRICT_JSON_ENUM(VerdictSource, {{VerdictSource::static_scan, "static_scan"},
                                             {VerdictSource::llm_self_check, "llm_self_check"},
                                             {VerdictSource::both, "both"}})
SOCRATIC_STRICT_JSON_ENUM(Outcome, {{Outcome::rejected_off_topic, "rejected_off_topic"},
                                       {Outcome::answered, "answered"},
                                       {Outcome::fallback, "fallback"}})

}  // namespace socratic
