#include "socratic/domain.hpp"

#include <cctype>
#include <ctime>
#include <iomanip>
#include <random>
#include <sstream>

#include "socratic/error.hpp"

namespace socratic {

Timestamp now_utc() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  auto secs = floor<seconds>(ts);
  auto ms = (ts - secs).count();
  std::time_t t = system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms
      << 'Z';
  return out.str();
}

Timestamp parse_timestamp(std::string_view text) {
  std::tm tm{};
  std::istringstream in{std::string(text)};
  in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
  if (in.fail()) {
    throw Error(ErrorCode::parse_error, "bad timestamp '" + std::string(text) + "'");
  }
  int ms = 0;
  if (in.peek() == '.') {
    in.get();
    std::string digits;
    while (std::isdigit(in.peek())) digits.push_back(static_cast<char>(in.get()));
    if (digits.empty() || digits.size() > 3) {
      throw Error(ErrorCode::parse_error, "bad timestamp fraction '" + std::string(text) + "'");
    }
    digits.resize(3, '0');
    ms = std::stoi(digits);
  }
  if (in.get() != 'Z' || in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::parse_error, "timestamp must end in Z: '" + std::string(text) + "'");
  }
  auto secs = std::chrono::system_clock::from_time_t(timegm(&tm));
  return std::chrono::time_point_cast<std::chrono::milliseconds>(secs) +
         std::chrono::milliseconds(ms);
}

std::string_view to_string(StepTag tag) {
  switch (tag) {
    case StepTag::relevance: return "relevance";
    case StepTag::file_selection: return "file_selection";
    case StepTag::generation: return "generation";
    case StepTag::self_check: return "self_check";
  }
  return "unknown";
}

std::optional<StepTag> parse_step_tag(std::string_view text) {
  for (auto tag : {StepTag::relevance, StepTag::file_selection, StepTag::generation,
                   StepTag::self_check}) {
    if (to_string(tag) == text) return tag;
  }
  return std::nullopt;
}

std::string_view to_string(Violation v) {
  switch (v) {
    case Violation::code_block: return "code_block";
    case Violation::pseudocode_or_steps: return "pseudocode_or_steps";
    case Violation::solution_reveal: return "solution_reveal";
    case Violation::empty_or_garbled: return "empty_or_garbled";
  }
  return "unknown";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::rejected_off_topic: return "rejected_off_topic";
    case Outcome::answered: return "answered";
    case Outcome::fallback: return "fallback";
  }
  return "unknown";
}

std::string_view trim(std::string_view text) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

bool is_valid_identifier(std::string_view id) {
  if (id.empty() || id.size() > 128 || id == "." || id == "..") return false;
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) {
      return false;
    }
  }
  return true;
}

std::string generate_session_id() {
  static thread_local std::mt19937_64 rng{[] {
    std::random_device rd;
    std::seed_seq seq{rd(), rd(), rd(), rd()};
    return std::mt19937_64(seq);
  }()};
  std::ostringstream out;
  out << std::hex << std::setfill('0') << std::setw(16) << rng() << std::setw(16) << rng();
  return out.str();
}

Session create_session(const std::string& exercise_id, const std::string& student_id,
                       Timestamp created_at) {
  if (!is_valid_identifier(exercise_id)) {
    throw Error(ErrorCode::unknown_exercise, "invalid exercise id '" + exercise_id + "'");
  }
  if (!is_valid_identifier(student_id)) {
    throw Error(ErrorCode::invalid_argument, "invalid student id '" + student_id + "'");
  }
  Session s;
  s.session_id = generate_session_id();
  s.exercise_id = exercise_id;
  s.student_id = student_id;
  s.created_at = created_at;
  s.state = SessionState::active;
  return s;
}

Session append_message(const Session& session, Role role, std::string_view content,
                       Timestamp at) {
  if (session.state != SessionState::active) {
    throw Error(ErrorCode::session_closed, "session " + session.session_id + " is closed");
  }
  if (trim(content).empty()) {
    throw Error(ErrorCode::empty_content, "message content is empty");
  }
  if (role != Role::system) {
    for (auto it = session.messages.rbegin(); it != session.messages.rend(); ++it) {
      if (it->role == Role::system) continue;
      if (it->role == role) {
        throw Error(ErrorCode::alternation_violation,
                    "two consecutive " + nlohmann::json(role).get<std::string>() + " messages");
      }
      break;
    }
  }
  Session next = session;
  Message m;
  m.role = role;
  m.content = std::string(content);
  m.timestamp = at;
  m.sequence = session.messages.empty() ? 0 : session.messages.back().sequence + 1;
  next.messages.push_back(std::move(m));
  return next;
}

std::vector<std::string> check_trace_invariants(const PipelineTrace& t, int max_refinements,
                                                int relevance_threshold) {
  std::vector<std::string> problems;
  bool low = t.relevance_score && *t.relevance_score < relevance_threshold;
  if (t.gated != low) problems.push_back("gated must hold exactly when relevance_score < threshold");
  if (t.relevance_score && (*t.relevance_score < 1 || *t.relevance_score > 10)) {
    problems.push_back("relevance_score outside 1..10");
  }
  if (t.gated && (!t.selected_files.empty() || !t.drafts.empty())) {
    problems.push_back("gated trace has selected files or drafts");
  }
  int expected_refinements = t.drafts.empty() ? 0 : static_cast<int>(t.drafts.size()) - 1;
  if (t.refinement_count != expected_refinements) {
    problems.push_back("refinement_count != max(0, drafts - 1)");
  }
  if (t.refinement_count > max_refinements) problems.push_back("refinement_count > max_refinements");
  if (t.outcome == Outcome::answered && (t.drafts.empty() || !t.drafts.back().verdict.passed)) {
    problems.push_back("answered outcome without a passing last draft");
  }
  for (std::size_t i = 1; i < t.drafts.size(); ++i) {
    if (t.drafts[i].assistance_level > t.drafts[i - 1].assistance_level) {
      problems.push_back("assistance level increased between drafts");
    }
  }
  for (const auto& d : t.drafts) {
    if (d.verdict.passed != d.verdict.violations.empty()) {
      problems.push_back("verdict passed flag disagrees with violations");
    }
  }
  return problems;
}

// --- JSON ------------------------------------------------------------------

void to_json(nlohmann::json& j, const Message& m) {
  j = nlohmann::json{{"role", m.role},
                     {"content", m.content},
                     {"timestamp", format_timestamp(m.timestamp)},
                     {"sequence", m.sequence}};
}

void from_json(const nlohmann::json& j, Message& m) {
  j.at("role").get_to(m.role);
  j.at("content").get_to(m.content);
  m.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
  j.at("sequence").get_to(m.sequence);
}

void to_json(nlohmann::json& j, const Session& s) {
  j = nlohmann::json{{"session_id", s.session_id},
                     {"exercise_id", s.exercise_id},
                     {"student_id", s.student_id},
                     {"messages", s.messages},
                     {"created_at", format_timestamp(s.created_at)},
                     {"state", s.state}};
}

void from_json(const nlohmann::json& j, Session& s) {
  j.at("session_id").get_to(s.session_id);
  j.at("exercise_id").get_to(s.exercise_id);
  j.at("student_id").get_to(s.student_id);
  j.at("messages").get_to(s.messages);
  s.created_at = parse_timestamp(j.at("created_at").get<std::string>());
  j.at("state").get_to(s.state);
}

void to_json(nlohmann::json& j, const GuardrailVerdict& v) {
  j = nlohmann::json{{"passed", v.passed}, {"violations", v.violations}, {"source", v.source}};
}

void from_json(const nlohmann::json& j, GuardrailVerdict& v) {
  j.at("passed").get_to(v.passed);
  j.at("violations").get_to(v.violations);
  j.at("source").get_to(v.source);
}

void to_json(nlohmann::json& j, const Draft& d) {
  j = nlohmann::json{
      {"text", d.text}, {"verdict", d.verdict}, {"assistance_level", d.assistance_level}};
}

void from_json(const nlohmann::json& j, Draft& d) {
  j.at("text").get_to(d.text);
  j.at("verdict").get_to(d.verdict);
  j.at("assistance_level").get_to(d.assistance_level);
}

void to_json(nlohmann::json& j, const LlmCallSummary& c) {
  j = nlohmann::json{{"step_tag", c.step_tag},
                     {"backend", c.backend},
                     {"completion", c.completion},
                     {"latency_ms", c.latency_ms},
                     {"prompt_chars", c.prompt_chars}};
}

void from_json(const nlohmann::json& j, LlmCallSummary& c) {
  j.at("step_tag").get_to(c.step_tag);
  j.at("backend").get_to(c.backend);
  j.at("completion").get_to(c.completion);
  j.at("latency_ms").get_to(c.latency_ms);
  j.at("prompt_chars").get_to(c.prompt_chars);
}

void to_json(nlohmann::json& j, const PipelineTrace& t) {
  j = nlohmann::json{
      {"message_sequence", t.message_sequence},
      {"relevance_score", t.relevance_score ? nlohmann::json(*t.relevance_score) : nlohmann::json(nullptr)},
      {"gated", t.gated},
      {"selected_files", t.selected_files},
      {"build_log_requested", t.build_log_requested},
      {"drafts", t.drafts},
      {"refinement_count", t.refinement_count},
      {"llm_calls", t.llm_calls},
      {"outcome", t.outcome},
      {"warnings", t.warnings},
      {"error", t.error ? nlohmann::json(*t.error) : nlohmann::json(nullptr)},
  };
}

void from_json(const nlohmann::json& j, PipelineTrace& t) {
  j.at("message_sequence").get_to(t.message_sequence);
  const auto& score = j.at("relevance_score");
  t.relevance_score = score.is_null() ? std::nullopt : std::optional<int>(score.get<int>());
  j.at("gated").get_to(t.gated);
  j.at("selected_files").get_to(t.selected_files);
  j.at("build_log_requested").get_to(t.build_log_requested);
  j.at("drafts").get_to(t.drafts);
  j.at("refinement_count").get_to(t.refinement_count);
  j.at("llm_calls").get_to(t.llm_calls);
  j.at("outcome").get_to(t.outcome);
  t.warnings = j.value("warnings", std::vector<std::string>{});
  const auto err = j.find("error");
  t.error = (err == j.end() || err->is_null()) ? std::nullopt
                                               : std::optional<std::string>(err->get<std::string>());
}

}  // namespace socratic
