#include "socratic/guardrails.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "socratic/context.hpp"
#include "socratic/error.hpp"

namespace fs = std::filesystem;

namespace socratic {
namespace detail {
const std::map<std::string_view, std::string_view>& default_template_files();
}  // namespace detail

namespace {

// Rule sentences every tutor preamble must carry.
constexpr std::string_view kRequiredRules[] = {
    "You are an excellent tutor.",
    "never under any circumstances responds with code, pseudocode, or implementations",
    "provides a single subtle clue, a counter-question, or best practice",
    "say \"Sorry, I don't know\" and tell the student to ask a human tutor",
};

std::string strip_final_newline(std::string_view text) {
  if (!text.empty() && text.back() == '\n') text.remove_suffix(1);
  if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
  return std::string(text);
}

std::vector<FewShot> parse_few_shots(std::string_view text) {
  std::vector<FewShot> shots;
  std::istringstream in{std::string(text)};
  std::string line;
  FewShot current;
  auto flush = [&] {
    if (!current.student_question.empty() || !current.expected_answer.empty()) {
      if (current.student_question.empty() || current.expected_answer.empty()) {
        throw Error(ErrorCode::config_error, "few-shot block needs both a Student: and a Tutor: line");
      }
      shots.push_back(std::move(current));
      current = {};
    }
  };
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty()) {
      flush();
    } else if (t.rfind("Student:", 0) == 0) {
      current.student_question = std::string(trim(t.substr(8)));
    } else if (t.rfind("Tutor:", 0) == 0) {
      current.expected_answer = std::string(trim(t.substr(6)));
    } else {
      throw Error(ErrorCode::config_error, "unexpected few-shot line: " + std::string(t));
    }
  }
  flush();
  return shots;
}

void apply_file(PromptTemplate& t, std::string_view name, std::string_view raw) {
  auto text = strip_final_newline(raw);
  if (name == "role_preamble") t.role_preamble = text;
  else if (name == "few_shots") t.few_shots = parse_few_shots(text);
  else if (name == "level_L1") t.level_directives[AssistanceLevel::L1] = text;
  else if (name == "level_L2") t.level_directives[AssistanceLevel::L2] = text;
  else if (name == "level_L3") t.level_directives[AssistanceLevel::L3] = text;
  else if (name == "generation_system") t.generation_system = text;
  else if (name == "generation_user") t.generation_user = text;
  else if (name == "relevance_system") t.relevance_system = text;
  else if (name == "relevance_user") t.relevance_user = text;
  else if (name == "relevance_retry") t.relevance_retry = text;
  else if (name == "file_selection_system") t.file_selection_system = text;
  else if (name == "file_selection_user") t.file_selection_user = text;
  else if (name == "self_check_system") t.self_check_system = text;
  else if (name == "self_check_user") t.self_check_user = text;
}

bool starts_with_keyword(std::string_view line, std::string_view keyword) {
  if (line.substr(0, keyword.size()) != keyword) return false;
  if (line.size() == keyword.size()) return true;
  // "if(" style keywords already end in punctuation
  auto last = static_cast<unsigned char>(keyword.back());
  if (!std::isalnum(last) && last != '_') return true;
  auto next = static_cast<unsigned char>(line[keyword.size()]);
  return !(std::isalnum(next) || next == '_');
}

}  // namespace

const PromptTemplate& PromptTemplate::defaults() {
  static const PromptTemplate t = [] {
    PromptTemplate out;
    for (const auto& [name, text] : detail::default_template_files()) apply_file(out, name, text);
    validate_templates(out);
    return out;
  }();
  return t;
}

void validate_templates(const PromptTemplate& t) {
  for (auto rule : kRequiredRules) {
    if (t.role_preamble.find(rule) == std::string::npos) {
      throw Error(ErrorCode::config_error, "role preamble is missing the rule: " + std::string(rule));
    }
  }
  bool has_refusal = false;
  for (const auto& shot : t.few_shots) {
    if (shot.student_question == kRefusalQuestion && shot.expected_answer == kRefusalAnswer) {
      has_refusal = true;
    }
  }
  if (!has_refusal) {
    throw Error(ErrorCode::config_error, "few-shot examples must include the complete-solution refusal");
  }
  for (auto level : {AssistanceLevel::L1, AssistanceLevel::L2, AssistanceLevel::L3}) {
    auto it = t.level_directives.find(level);
    if (it == t.level_directives.end() || trim(it->second).empty()) {
      throw Error(ErrorCode::config_error, "missing level directive");
    }
  }
}

PromptTemplate load_prompt_templates(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::config_error, "TEMPLATE_DIR is not a directory: " + dir.string());
  }
  PromptTemplate t = PromptTemplate::defaults();
  for (const auto& [name, _] : detail::default_template_files()) {
    auto path = dir / (std::string(name) + ".txt");
    if (!fs::exists(path, ec)) continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::config_error, "cannot read template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    apply_file(t, name, buf.str());
  }
  validate_templates(t);
  return t;
}

std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      auto close = tpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto key = tpl.substr(i + 1, close - i - 1);
        auto it = vars.find(std::string(key));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tpl[i++];
  }
  return out;
}

std::string render_few_shots(const std::vector<FewShot>& shots) {
  std::string out;
  for (const auto& s : shots) {
    if (!out.empty()) out += "\n\n";
    out += "Student: " + s.student_question + "\nTutor: " + s.expected_answer;
  }
  return out;
}

std::string render_system_prompt(AssistanceLevel level, const PromptTemplate& templates) {
  auto body = render_template(templates.generation_system,
                              {{"role_preamble", templates.role_preamble},
                               {"level_directive", templates.level_directives.at(level)},
                               {"few_shots", render_few_shots(templates.few_shots)}});
  return "STEP: " + std::string(to_string(StepTag::generation)) + "\n" + body;
}

// --- static scan -------------------------------------------------------------

bool looks_like_code_line(std::string_view line, const ScanRules& rules) {
  auto t = trim(line);
  if (t.empty()) return false;
  char last = t.back();
  if (last == ';' || last == '{' || last == '}') return true;
  for (const auto& kw : rules.code_keywords) {
    if (!kw.empty() && starts_with_keyword(t, kw)) return true;
  }
  return false;
}

bool looks_like_numbered_step(std::string_view line) {
  auto t = trim(line);
  std::size_t digits = 0;
  while (digits < t.size() && std::isdigit(static_cast<unsigned char>(t[digits]))) ++digits;
  if (digits > 0 && digits < t.size() && (t[digits] == '.' || t[digits] == ')')) return true;
  if (t.size() > 5 && (t[0] == 'S' || t[0] == 's') && t.substr(1, 4) == "tep " &&
      std::isdigit(static_cast<unsigned char>(t[5]))) {
    return true;
  }
  return false;
}

GuardrailVerdict static_scan(std::string_view draft, const ScanRules& rules) {
  std::set<Violation> violations;

  if (draft.find("```") != std::string_view::npos) violations.insert(Violation::code_block);

  std::size_t run = 0;
  std::size_t steps = 0;
  std::size_t start = 0;
  while (start <= draft.size()) {
    auto end = draft.find('\n', start);
    auto line = draft.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    auto t = trim(line);
    if (t.substr(0, 3) == "~~~") violations.insert(Violation::code_block);
    if (looks_like_code_line(line, rules)) {
      if (++run >= rules.code_run_threshold) violations.insert(Violation::code_block);
    } else {
      run = 0;
    }
    if (looks_like_numbered_step(line)) ++steps;
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (steps >= rules.numbered_step_threshold) violations.insert(Violation::pseudocode_or_steps);
  if (utf8_length(trim(draft)) < rules.min_chars) violations.insert(Violation::empty_or_garbled);

  if (violations.empty()) return GuardrailVerdict::pass(VerdictSource::static_scan);
  return GuardrailVerdict::fail(std::move(violations), VerdictSource::static_scan);
}

// --- self check --------------------------------------------------------------

GuardrailVerdict parse_self_check(std::string_view completion, bool* unparseable) {
  auto rest = completion;
  while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
  auto first_line = trim(rest.substr(0, rest.find('\n')));
  if (unparseable) *unparseable = false;
  if (first_line == "PASS") return GuardrailVerdict::pass(VerdictSource::llm_self_check);
  bool is_fail = first_line.substr(0, 4) == "FAIL" &&
                 (first_line.size() == 4 ||
                  !std::isalnum(static_cast<unsigned char>(first_line[4])));
  if (!is_fail && unparseable) *unparseable = true;
  return GuardrailVerdict::fail({Violation::solution_reveal}, VerdictSource::llm_self_check);
}

ChatPrompt build_self_check_prompt(std::string_view draft, const PromptTemplate& templates) {
  auto system = render_template(templates.self_check_system, {{"role_preamble", templates.role_preamble}});
  auto user = render_template(templates.self_check_user, {{"draft", std::string(draft)}});
  return make_prompt(StepTag::self_check, system, {{ChatRole::user, std::move(user)}});
}

SelfCheckResult llm_self_check(LlmClient& client, std::string_view draft,
                               const PromptTemplate& templates) {
  SelfCheckResult result;
  result.exchange = client.complete(build_self_check_prompt(draft, templates));
  bool unparseable = false;
  result.verdict = parse_self_check(result.exchange.completion, &unparseable);
  if (unparseable) {
    result.warning = "self-check verdict unparseable, treated as FAIL";
  }
  return result;
}

// --- refinement --------------------------------------------------------------

RefineResult refine_until_safe(const DraftGenerator& generate, const SelfChecker& self_check,
                               AssistanceLevel initial_level, int max_refinements,
                               std::vector<Draft>& drafts, const ScanRules& rules) {
  if (max_refinements < 0) {
    throw Error(ErrorCode::invalid_argument, "max_refinements must be >= 0");
  }
  AssistanceLevel level = initial_level;
  for (int attempt = 0; attempt <= max_refinements; ++attempt) {
    std::string text = generate(level);
    GuardrailVerdict verdict = static_scan(text, rules);
    if (verdict.passed) {
      verdict = self_check(text);
      if (verdict.passed && verdict.violations.empty()) {
        verdict.source = VerdictSource::both;
      } else {
        verdict.passed = false;
        if (verdict.violations.empty()) verdict.violations.insert(Violation::solution_reveal);
        verdict.source = VerdictSource::llm_self_check;
      }
    }
    drafts.push_back({text, verdict, level});
    if (verdict.passed) return {std::move(text), Outcome::answered};
    level = lower(level);
  }
  return {std::string(kFallbackReply), Outcome::fallback};
}

}  // namespace socratic
