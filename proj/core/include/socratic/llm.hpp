#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "socratic/domain.hpp"

namespace socratic {

enum class ChatRole { system, user, assistant };

SOCRATIC_STRICT_JSON_ENUM(ChatRole, {{ChatRole::system, "system"},
                                     {ChatRole::user, "user"},
                                     {ChatRole::assistant, "assistant"}})

struct ChatMessage {
  ChatRole role = ChatRole::user;
  std::string content;
};

/// A single chat-completion request. The first message is always the system
/// message and its first line is "STEP: <tag>", which is what the mock backend
/// dispatches on and what a trace reader greps for.
struct ChatPrompt {
  StepTag step_tag = StepTag::relevance;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 1024;
};

inline constexpr int kDefaultMaxTokens = 1024;

/// 0.5 for generation, 0.0 for the parse-sensitive steps.
double default_temperature(StepTag tag);

/// Builds a prompt whose system message is "STEP: <tag>\n" + system_body.
ChatPrompt make_prompt(StepTag tag, std::string_view system_body,
                       std::vector<ChatMessage> conversation);

/// Throws Error(invalid_argument) when the prompt breaks its invariants.
void validate_prompt(const ChatPrompt& prompt);

/// Flat text form used for substring expectations and size accounting.
std::string render_prompt_text(const ChatPrompt& prompt);

struct LlmExchange {
  ChatPrompt prompt;
  std::string completion;
  std::int64_t latency_ms = 0;
  Backend backend = Backend::mock;
};

LlmCallSummary summarize(const LlmExchange& exchange);

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual LlmExchange complete(const ChatPrompt& prompt) = 0;
};

// --- mock -------------------------------------------------------------------

struct MockEntry {
  StepTag expect_step = StepTag::relevance;
  std::optional<std::string> expect_substring;
  std::string reply;
};

struct MockScript {
  std::vector<MockEntry> entries;
};

void to_json(nlohmann::json& j, const MockEntry& e);
void to_json(nlohmann::json& j, const MockScript& s);

/// Parses the JSON-array script format. `source` only labels error messages.
MockScript parse_mock_script(std::string_view text, std::string_view source = "<script>");
MockScript load_mock_script(const std::filesystem::path& path);

/// Replays a MockScript strictly in order. Thread-safe; concurrent callers
/// consume entries one at a time.
class MockLlmClient final : public LlmClient {
 public:
  explicit MockLlmClient(MockScript script);

  LlmExchange complete(const ChatPrompt& prompt) override;

  std::size_t consumed() const;
  std::size_t remaining() const;

 private:
  mutable std::mutex mutex_;
  MockScript script_;
  std::size_t next_ = 0;
};

// --- http -------------------------------------------------------------------

struct HttpBackendConfig {
  /// Full chat-completions URL, e.g. https://api.openai.com/v1/chat/completions
  std::string endpoint;
  std::string model;
  std::string api_key;
  std::chrono::milliseconds timeout{60'000};
  /// Delay before each retry; its size is the retry count.
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(500),
                                                 std::chrono::milliseconds(2000)};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// OpenAI-compatible chat-completions client. Transient failures (transport
/// errors, 429, 5xx) are retried per `backoff`; anything else fails at once.
/// The completion text is returned exactly as the server sent it.
class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(HttpBackendConfig config, Sleeper sleeper = {});

  LlmExchange complete(const ChatPrompt& prompt) override;

  /// Request body for `prompt`, exposed for wire-format tests.
  nlohmann::json request_body(const ChatPrompt& prompt) const;

 private:
  HttpBackendConfig config_;
  Sleeper sleeper_;
  std::string base_url_;
  std::string path_;
};

}  // namespace socratic
