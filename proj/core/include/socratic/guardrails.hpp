#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "socratic/domain.hpp"
#include "socratic/llm.hpp"

namespace socratic {

inline constexpr std::string_view kFallbackReply =
    "I can't phrase a good hint right now without giving too much away. Try re-reading the "
    "problem statement, and ask me a more specific question or contact a human tutor.";

inline constexpr std::string_view kRefusalAnswer =
    "Sorry, but I cannot provide a complete solution. I encourage you to try to solve the task "
    "yourself. If you have any specific questions, I will be happy to help you.";

inline constexpr std::string_view kRefusalQuestion =
    "Can you give me the complete solution to this exercise?";

struct FewShot {
  std::string student_question;
  std::string expected_answer;
};

/// Everything the prompts are built from. The defaults are compiled in from
/// core/templates/; a TEMPLATE_DIR can override any of the files.
///
/// Text templates use {name} placeholders. Unknown placeholders are left as is.
struct PromptTemplate {
  std::string role_preamble;
  std::vector<FewShot> few_shots;
  std::map<AssistanceLevel, std::string> level_directives;

  std::string generation_system;      // {role_preamble} {level_directive} {few_shots}
  std::string generation_user;        // {context_bundle} {history} {question}
  std::string relevance_system;       // {exercise_title}
  std::string relevance_user;         // {exercise_title} {history} {question}
  std::string relevance_retry;
  std::string file_selection_system;
  std::string file_selection_user;    // {file_listing} {history} {question}
  std::string self_check_system;      // {role_preamble}
  std::string self_check_user;        // {draft}

  static const PromptTemplate& defaults();
};

/// Starts from the defaults and replaces each piece whose file exists in
/// `dir`. Throws Error(config_error) if the result drops a mandatory rule
/// sentence or the complete-solution refusal example.
PromptTemplate load_prompt_templates(const std::filesystem::path& dir);

/// Throws Error(config_error) when `t` breaks the template invariants.
void validate_templates(const PromptTemplate& t);

std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars);

std::string render_few_shots(const std::vector<FewShot>& shots);

/// Full generation system message: "STEP: generation" line, tutor rules,
/// the directive for `level`, then the few-shot dialogues.
std::string render_system_prompt(AssistanceLevel level,
                                 const PromptTemplate& templates = PromptTemplate::defaults());

// --- static scan ---------------------------------------------------------------

struct ScanRules {
  /// A trimmed line starting with one of these counts as a code line.
  std::vector<std::string> code_keywords{"for", "while", "if(", "def", "class",
                                         "public", "return", "import", "#include"};
  std::size_t code_run_threshold = 3;
  std::size_t numbered_step_threshold = 4;
  std::size_t min_chars = 10;
};

bool looks_like_code_line(std::string_view line, const ScanRules& rules = {});
bool looks_like_numbered_step(std::string_view line);

/// Deterministic leak check: fenced blocks or dense code-line runs
/// (code_block), numbered step lists (pseudocode_or_steps), and near-empty
/// drafts (empty_or_garbled).
GuardrailVerdict static_scan(std::string_view draft, const ScanRules& rules = {});

// --- self check ----------------------------------------------------------------

struct SelfCheckResult {
  GuardrailVerdict verdict;
  LlmExchange exchange;
  /// Set when the first line was neither PASS nor FAIL (treated as FAIL).
  std::optional<std::string> warning;
};

/// Maps a self-check completion to a verdict. Only a first line of exactly
/// "PASS" passes.
GuardrailVerdict parse_self_check(std::string_view completion, bool* unparseable = nullptr);

ChatPrompt build_self_check_prompt(std::string_view draft,
                                   const PromptTemplate& templates = PromptTemplate::defaults());

SelfCheckResult llm_self_check(LlmClient& client, std::string_view draft,
                               const PromptTemplate& templates = PromptTemplate::defaults());

// --- refinement loop -----------------------------------------------------------

using DraftGenerator = std::function<std::string(AssistanceLevel)>;
using SelfChecker = std::function<GuardrailVerdict(const std::string& draft)>;

struct RefineResult {
  std::string final_text;
  Outcome outcome = Outcome::fallback;
};

/// Generates at `initial_level`, scans, self-checks; on failure drops one
/// level (floor L1) and regenerates. After `max_refinements` failed
/// refinements the fixed fallback reply is returned. Every judged draft is
/// appended to `drafts` as it is produced, so a backend exception leaves the
/// partial history there.
RefineResult refine_until_safe(const DraftGenerator& generate, const SelfChecker& self_check,
                               AssistanceLevel initial_level, int max_refinements,
                               std::vector<Draft>& drafts, const ScanRules& rules = {});

}  // namespace socratic
