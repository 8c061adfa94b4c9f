#include "socratic/pipeline.hpp"

#include <algorithm>
#include <cctype>

#include "socratic/error.hpp"

namespace socratic {
namespace {

std::string_view speaker(Role role) {
  switch (role) {
    case Role::student: return "Student";
    case Role::tutor: return "Tutor";
    case Role::system: return "System";
  }
  return "System";
}

}  // namespace

std::optional<int> parse_relevance(std::string_view completion) {
  std::size_t i = 0;
  while (i < completion.size()) {
    if (!std::isdigit(static_cast<unsigned char>(completion[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < completion.size() && std::isdigit(static_cast<unsigned char>(completion[j]))) ++j;
    auto run = completion.substr(i, j - i);
    // anything longer than two digits is out of range regardless of value
    if (run.size() <= 2) {
      int value = std::stoi(std::string(run));
      if (value >= 1 && value <= 10) return value;
    }
    i = j;
  }
  return std::nullopt;
}

std::string render_history(std::span<const Message> history, std::size_t window) {
  auto start = history.size() > window ? history.size() - window : 0;
  std::string out;
  for (auto i = start; i < history.size(); ++i) {
    if (!out.empty()) out += '\n';
    out += std::string(speaker(history[i].role)) + ": " + history[i].content;
  }
  return out.empty() ? "(no earlier messages)" : out;
}

ChatPrompt build_relevance_prompt(std::span<const Message> history, const Message& latest,
                                  std::string_view exercise_title, const PromptTemplate& templates) {
  std::map<std::string, std::string> vars{
      {"exercise_title", std::string(exercise_title)},
      {"history", render_history(history, kRelevanceHistoryWindow)},
      {"question", latest.content}};
  return make_prompt(StepTag::relevance, render_template(templates.relevance_system, vars),
                     {{ChatRole::user, render_template(templates.relevance_user, vars)}});
}

RelevanceScore assess_relevance(LlmClient& client, std::span<const Message> history,
                                const Message& latest, std::string_view exercise_title,
                                const PromptTemplate& templates) {
  if (latest.role != Role::student) {
    throw Error(ErrorCode::invalid_argument, "relevance is assessed on student messages only");
  }
  auto prompt = build_relevance_prompt(history, latest, exercise_title, templates);
  auto first = client.complete(prompt);
  if (auto v = parse_relevance(first.completion)) return {*v, first.completion, false};

  prompt.messages.push_back({ChatRole::assistant, first.completion});
  prompt.messages.push_back({ChatRole::user, templates.relevance_retry});
  auto second = client.complete(prompt);
  if (auto v = parse_relevance(second.completion)) return {*v, second.completion, false};
  return {kFailOpenRelevance, second.completion, true};
}

FileSelection parse_file_selection(std::string_view completion, const RepositorySnapshot& snapshot,
                                   bool build_log_available) {
  FileSelection sel;
  std::size_t start = 0;
  while (start <= completion.size()) {
    auto end = completion.find('\n', start);
    auto line = trim(completion.substr(start, end == std::string_view::npos ? std::string_view::npos
                                                                             : end - start));
    // the listing shows items as "- path"; models often echo the bullet
    if (line.size() > 2 && line.substr(0, 2) == "- ") line = trim(line.substr(2));
    if (!line.empty()) {
      std::string item(line);
      sel.requested.push_back(item);
      if (item == kBuildLogItem && build_log_available) {
        sel.include_build_log = true;
      } else if (snapshot.contains(item)) {
        if (sel.accepted.size() < kMaxSelectedFiles &&
            std::find(sel.accepted.begin(), sel.accepted.end(), item) == sel.accepted.end()) {
          sel.accepted.push_back(std::move(item));
        }
      } else if (std::find(sel.dropped.begin(), sel.dropped.end(), item) == sel.dropped.end()) {
        sel.dropped.push_back(std::move(item));
      }
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return sel;
}

ChatPrompt build_file_selection_prompt(const RepositorySnapshot& snapshot, bool build_log_available,
                                       std::span<const Message> history, const Message& latest,
                                       const PromptTemplate& templates) {
  auto listing = render_file_listing(snapshot, build_log_available);
  std::map<std::string, std::string> vars{
      {"file_listing", listing.empty() ? "(no files)" : listing},
      {"history", render_history(history, kGenerationHistoryWindow)},
      {"question", latest.content}};
  return make_prompt(StepTag::file_selection, render_template(templates.file_selection_system, vars),
                     {{ChatRole::user, render_template(templates.file_selection_user, vars)}});
}

FileSelection select_files(LlmClient& client, const RepositorySnapshot& snapshot,
                           bool build_log_available, std::span<const Message> history,
                           const Message& latest, const PromptTemplate& templates) {
  auto ex = client.complete(
      build_file_selection_prompt(snapshot, build_log_available, history, latest, templates));
  return parse_file_selection(ex.completion, snapshot, build_log_available);
}

ChatPrompt build_generation_prompt(const ContextBundle& bundle, std::span<const Message> history,
                                   const Message& latest, AssistanceLevel level,
                                   const PromptTemplate& templates) {
  ChatPrompt prompt;
  prompt.step_tag = StepTag::generation;
  prompt.temperature = default_temperature(StepTag::generation);
  prompt.max_tokens = kDefaultMaxTokens;
  prompt.messages.push_back({ChatRole::system, render_system_prompt(level, templates)});
  prompt.messages.push_back(
      {ChatRole::user, render_template(templates.generation_user,
                                       {{"context_bundle", render_bundle(bundle)},
                                        {"history", render_history(history, kGenerationHistoryWindow)},
                                        {"question", latest.content}})});
  return prompt;
}

std::string generate_response(LlmClient& client, const ContextBundle& bundle,
                              std::span<const Message> history, const Message& latest,
                              AssistanceLevel level, const PromptTemplate& templates) {
  return client.complete(build_generation_prompt(bundle, history, latest, level, templates)).completion;
}

LlmExchange RecordingClient::complete(const ChatPrompt& prompt) {
  auto ex = inner_.complete(prompt);
  calls_.push_back(summarize(ex));
  return ex;
}

TutorPipeline::TutorPipeline(LlmClient& client, PipelineConfig config, const PromptTemplate& templates)
    : client_(client), config_(std::move(config)), templates_(templates) {
  if (config_.max_refinements < 0) {
    throw Error(ErrorCode::config_error, "MAX_REFINEMENTS must be >= 0");
  }
  if (config_.relevance_threshold < 1 || config_.relevance_threshold > 10) {
    throw Error(ErrorCode::config_error, "RELEVANCE_THRESHOLD must be within 1..10");
  }
}

TurnResult TutorPipeline::handle_message(const Session& session, const ExerciseFixture& fixture,
                                         std::string_view latest_content, Timestamp now) const {
  TurnResult result;
  result.session = append_message(session, Role::student, latest_content, now);
  const Message& latest = result.session.messages.back();
  const std::span<const Message> history(result.session.messages.data(),
                                         result.session.messages.size() - 1);

  PipelineTrace& trace = result.trace;
  trace.message_sequence = latest.sequence;
  RecordingClient client(client_);

  try {
    auto score = assess_relevance(client, history, latest, fixture.title, templates_);
    trace.relevance_score = score.value;
    if (score.fell_back) {
      trace.warnings.push_back("relevance unparseable after retry; failing open with score " +
                               std::to_string(kFailOpenRelevance));
    }
    if (gate(score, config_.relevance_threshold) == GateDecision::reject) {
      trace.gated = true;
      trace.outcome = Outcome::rejected_off_topic;
      result.reply = std::string(kOffTopicReply);
    } else {
      const bool log_available = fixture.build_log.has_value();
      auto selection = select_files(client, fixture.repository, log_available, history, latest, templates_);
      trace.selected_files = selection.accepted;
      trace.build_log_requested = selection.include_build_log;
      for (const auto& d : selection.dropped) {
        trace.warnings.push_back("dropped unknown selection item: " + d);
      }
      auto bundle = assemble_context(fixture, selection.accepted, selection.include_build_log,
                                     config_.context_budget);

      auto generate = [&](AssistanceLevel level) {
        return generate_response(client, bundle, history, latest, level, templates_);
      };
      auto check = [&](const std::string& draft) {
        auto r = llm_self_check(client, draft, templates_);
        if (r.warning) trace.warnings.push_back(*r.warning);
        return r.verdict;
      };
      auto refined = refine_until_safe(generate, check, AssistanceLevel::L3, config_.max_refinements,
                                       trace.drafts, config_.scan_rules);
      trace.outcome = refined.outcome;
      result.reply = std::move(refined.final_text);
    }
  } catch (const Error& e) {
    if (!e.is_backend_error()) throw;
    trace.error = std::string(to_string(e.code())) + ": " + e.what();
    trace.outcome = Outcome::fallback;
    result.reply = std::string(kUnavailableReply);
  }

  trace.refinement_count = trace.drafts.empty() ? 0 : static_cast<int>(trace.drafts.size()) - 1;
  trace.llm_calls = client.calls();
  result.session = append_message(result.session, Role::tutor, result.reply, now);
  return result;
}

}  // namespace socratic
