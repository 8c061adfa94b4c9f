#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "socratic/context.hpp"
#include "socratic/domain.hpp"
#include "socratic/guardrails.hpp"
#include "socratic/llm.hpp"

namespace socratic {

inline constexpr std::string_view kOffTopicReply =
    "Your question seems to be off-topic for this exercise. Please rephrase it and focus on the "
    "programming task at hand.";

inline constexpr std::string_view kUnavailableReply =
    "The tutor is temporarily unavailable. Please try again in a few minutes.";

inline constexpr std::size_t kRelevanceHistoryWindow = 6;
inline constexpr std::size_t kGenerationHistoryWindow = 10;
inline constexpr std::size_t kMaxSelectedFiles = 5;
inline constexpr int kFailOpenRelevance = 5;

struct PipelineConfig {
  int relevance_threshold = 5;
  int max_refinements = 3;
  std::size_t context_budget = kDefaultContextBudget;
  ScanRules scan_rules;
};

/// Upper bound on LLM calls for one student message under `config`.
constexpr int max_llm_calls(const PipelineConfig& config) {
  return 2 + 1 + 2 * (config.max_refinements + 1);
}

struct RelevanceScore {
  int value = kFailOpenRelevance;
  std::string raw_completion;
  /// True when neither completion held a usable integer and `value` is the
  /// fail-open default.
  bool fell_back = false;
};

/// First maximal digit run whose value lies in 1..10, scanning left to right.
std::optional<int> parse_relevance(std::string_view completion);

/// "Student: ..." / "Tutor: ..." lines for the last `window` messages.
std::string render_history(std::span<const Message> history, std::size_t window);

ChatPrompt build_relevance_prompt(std::span<const Message> history, const Message& latest,
                                  std::string_view exercise_title,
                                  const PromptTemplate& templates = PromptTemplate::defaults());

/// One relevance call, plus one retry with a stricter instruction when the
/// completion holds no score. Two misses fail open to 5.
RelevanceScore assess_relevance(LlmClient& client, std::span<const Message> history,
                                const Message& latest, std::string_view exercise_title,
                                const PromptTemplate& templates = PromptTemplate::defaults());

enum class GateDecision { proceed, reject };

constexpr GateDecision gate(const RelevanceScore& score, int threshold = 5) {
  return score.value < threshold ? GateDecision::reject : GateDecision::proceed;
}

struct FileSelection {
  std::vector<std::string> requested;
  std::vector<std::string> accepted;
  bool include_build_log = false;
  std::vector<std::string> dropped;
};

/// Validates a selection completion against the snapshot: exact paths are
/// accepted in emission order (at most five), BUILD_LOG sets the flag when a
/// log exists, anything else is dropped.
FileSelection parse_file_selection(std::string_view completion, const RepositorySnapshot& snapshot,
                                   bool build_log_available);

ChatPrompt build_file_selection_prompt(const RepositorySnapshot& snapshot, bool build_log_available,
                                       std::span<const Message> history, const Message& latest,
                                       const PromptTemplate& templates = PromptTemplate::defaults());

FileSelection select_files(LlmClient& client, const RepositorySnapshot& snapshot,
                           bool build_log_available, std::span<const Message> history,
                           const Message& latest,
                           const PromptTemplate& templates = PromptTemplate::defaults());

ChatPrompt build_generation_prompt(const ContextBundle& bundle, std::span<const Message> history,
                                   const Message& latest, AssistanceLevel level,
                                   const PromptTemplate& templates = PromptTemplate::defaults());

/// Raw draft from one generation call. No filtering happens here.
std::string generate_response(LlmClient& client, const ContextBundle& bundle,
                              std::span<const Message> history, const Message& latest,
                              AssistanceLevel level,
                              const PromptTemplate& templates = PromptTemplate::defaults());

/// Decorator that keeps a summary of every successful exchange.
class RecordingClient final : public LlmClient {
 public:
  explicit RecordingClient(LlmClient& inner) : inner_(inner) {}

  LlmExchange complete(const ChatPrompt& prompt) override;

  const std::vector<LlmCallSummary>& calls() const { return calls_; }

 private:
  LlmClient& inner_;
  std::vector<LlmCallSummary> calls_;
};

struct TurnResult {
  Session session;  // with the student message and the tutor reply appended
  std::string reply;
  PipelineTrace trace;
};

/// The four-step tutoring chain: relevance gate, file selection, grounded
/// generation, and the self-check refinement loop.
class TutorPipeline {
 public:
  TutorPipeline(LlmClient& client, PipelineConfig config,
                const PromptTemplate& templates = PromptTemplate::defaults());

  /// Runs one student turn. Input errors (empty content, closed session,
  /// alternation) throw before any LLM call. Backend failures do not throw:
  /// they yield the unavailability reply and a partial trace with `error` set.
  TurnResult handle_message(const Session& session, const ExerciseFixture& fixture,
                            std::string_view latest_content, Timestamp now = now_utc()) const;

  const PipelineConfig& config() const { return config_; }

 private:
  LlmClient& client_;
  PipelineConfig config_;
  const PromptTemplate& templates_;
};

}  // namespace socratic
