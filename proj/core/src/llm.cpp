#include "socratic/llm.hpp"

#include <fstream>
#include <sstream>

#include "socratic/error.hpp"

namespace socratic {

double default_temperature(StepTag tag) { return tag == StepTag::generation ? 0.5 : 0.0; }

ChatPrompt make_prompt(StepTag tag, std::string_view system_body,
                       std::vector<ChatMessage> conversation) {
  ChatPrompt prompt;
  prompt.step_tag = tag;
  prompt.temperature = default_temperature(tag);
  prompt.max_tokens = kDefaultMaxTokens;
  std::string system = "STEP: " + std::string(to_string(tag)) + "\n" + std::string(system_body);
  prompt.messages.push_back({ChatRole::system, std::move(system)});
  for (auto& m : conversation) prompt.messages.push_back(std::move(m));
  return prompt;
}

void validate_prompt(const ChatPrompt& prompt) {
  if (prompt.messages.empty() || prompt.messages.front().role != ChatRole::system ||
      trim(prompt.messages.front().content).empty()) {
    throw Error(ErrorCode::invalid_argument, "prompt must start with a non-empty system message");
  }
  const std::string tag_line = "STEP: " + std::string(to_string(prompt.step_tag));
  const auto& sys = prompt.messages.front().content;
  if (sys.compare(0, tag_line.size(), tag_line) != 0 ||
      (sys.size() > tag_line.size() && sys[tag_line.size()] != '\n')) {
    throw Error(ErrorCode::invalid_argument, "system message must begin with '" + tag_line + "'");
  }
  if (prompt.temperature < 0.0 || prompt.temperature > 2.0) {
    throw Error(ErrorCode::invalid_argument, "temperature outside [0, 2]");
  }
  if (prompt.max_tokens <= 0) {
    throw Error(ErrorCode::invalid_argument, "max_tokens must be positive");
  }
}

std::string render_prompt_text(const ChatPrompt& prompt) {
  std::string out;
  for (const auto& m : prompt.messages) {
    out += '[';
    out += nlohmann::json(m.role).get<std::string>();
    out += "]\n";
    out += m.content;
    out += "\n\n";
  }
  return out;
}

LlmCallSummary summarize(const LlmExchange& exchange) {
  LlmCallSummary s;
  s.step_tag = exchange.prompt.step_tag;
  s.backend = exchange.backend;
  s.completion = exchange.completion;
  s.latency_ms = exchange.latency_ms;
  s.prompt_chars = render_prompt_text(exchange.prompt).size();
  return s;
}

// --- mock script -------------------------------------------------------------

void to_json(nlohmann::json& j, const MockEntry& e) {
  j = nlohmann::json{
      {"expect_step", e.expect_step},
      {"expect_substring", e.expect_substring ? nlohmann::json(*e.expect_substring) : nlohmann::json(nullptr)},
      {"reply", e.reply}};
}

void to_json(nlohmann::json& j, const MockScript& s) {
  j = nlohmann::json::array();
  for (const auto& e : s.entries) j.push_back(e);
}

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace

MockScript parse_mock_script(std::string_view text, std::string_view source) {
  MockScript script;
  if (trim(text).empty()) return script;

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports the byte just past the offending token
    std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw Error(ErrorCode::parse_error, std::string(source) + ":" +
                                            std::to_string(line_of(text, at)) + ": " + e.what());
  }
  if (!doc.is_array()) {
    throw Error(ErrorCode::parse_error, std::string(source) + ":1: mock script must be a JSON array");
  }
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    auto where = std::string(source) + ": entry " + std::to_string(i);
    if (!item.is_object() || !item.contains("expect_step") || !item["expect_step"].is_string() ||
        !item.contains("reply") || !item["reply"].is_string()) {
      throw Error(ErrorCode::parse_error,
                  where + ": expected {\"expect_step\": string, \"reply\": string}");
    }
    MockEntry entry;
    auto tag_text = item["expect_step"].get<std::string>();
    auto tag = parse_step_tag(tag_text);
    if (!tag) throw Error(ErrorCode::unknown_step_tag, where + ": unknown step tag '" + tag_text + "'");
    entry.expect_step = *tag;
    if (auto it = item.find("expect_substring"); it != item.end() && !it->is_null()) {
      if (!it->is_string()) throw Error(ErrorCode::parse_error, where + ": expect_substring must be a string or null");
      entry.expect_substring = it->get<std::string>();
    }
    entry.reply = item["reply"].get<std::string>();
    script.entries.push_back(std::move(entry));
  }
  return script;
}

MockScript load_mock_script(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open mock script " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mock_script(buf.str(), path.string());
}

// --- mock client -------------------------------------------------------------

MockLlmClient::MockLlmClient(MockScript script) : script_(std::move(script)) {}

LlmExchange MockLlmClient::complete(const ChatPrompt& prompt) {
  validate_prompt(prompt);
  std::lock_guard<std::mutex> lock(mutex_);
  if (next_ >= script_.entries.size()) {
    throw Error(ErrorCode::mock_exhausted,
                "mock script exhausted at " + std::string(to_string(prompt.step_tag)) + " call");
  }
  const auto& entry = script_.entries[next_];
  if (entry.expect_step != prompt.step_tag) {
    throw Error(ErrorCode::mock_mismatch, "mock entry " + std::to_string(next_) + " expects step " +
                                              std::string(to_string(entry.expect_step)) +
                                              ", got " + std::string(to_string(prompt.step_tag)));
  }
  if (entry.expect_substring &&
      render_prompt_text(prompt).find(*entry.expect_substring) == std::string::npos) {
    throw Error(ErrorCode::mock_mismatch, "mock entry " + std::to_string(next_) +
                                              " expects substring '" + *entry.expect_substring +
                                              "' in the prompt");
  }
  ++next_;
  return LlmExchange{prompt, entry.reply, 0, Backend::mock};
}

std::size_t MockLlmClient::consumed() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return next_;
}

std::size_t MockLlmClient::remaining() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return script_.entries.size() - next_;
}

}  // namespace socratic
