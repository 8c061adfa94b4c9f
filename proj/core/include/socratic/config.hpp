#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "socratic/guardrails.hpp"
#include "socratic/llm.hpp"
#include "socratic/pipeline.hpp"

namespace socratic {

/// Flat key=value settings. Sources, lowest precedence first: built-in
/// defaults, process environment, then the config file given explicitly.
class Config {
 public:
  static constexpr std::string_view kKnownKeys[] = {
      "LLM_ENDPOINT",        "LLM_MODEL",     "LLM_API_KEY",         "LLM_BACKEND",
      "MOCK_SCRIPT_PATH",    "RELEVANCE_THRESHOLD", "MAX_REFINEMENTS", "CONTEXT_BUDGET_CHARS",
      "TEMPLATE_DIR",        "CODE_KEYWORDS", "BIND_ADDR",           "FIXTURES_DIR",
      "CORS_ORIGIN",         "STORE_DIR",
  };

  Config() = default;

  /// Environment values for the known keys, then `file` on top if given.
  static Config load(const std::optional<std::filesystem::path>& file, bool use_environment = true);

  /// Parses "KEY=value" lines; '#' starts a comment line. Unknown keys are
  /// rejected so typos do not go unnoticed.
  static Config parse(std::string_view text, std::string_view source = "<config>");

  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
  void merge(const Config& other);

  std::optional<std::string> get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string_view fallback) const;
  long get_int(std::string_view key, long fallback) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

PipelineConfig pipeline_config_from(const Config& config);

/// Defaults, or TEMPLATE_DIR overrides when set.
PromptTemplate prompt_templates_from(const Config& config);

/// LLM_BACKEND=mock needs MOCK_SCRIPT_PATH; http (the default) needs
/// LLM_ENDPOINT and LLM_MODEL.
std::unique_ptr<LlmClient> make_llm_client(const Config& config);

struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};

BindAddress parse_bind_address(std::string_view text);

}  // namespace socratic
