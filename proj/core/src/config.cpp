#include "socratic/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "socratic/error.hpp"

namespace socratic {
namespace {

bool is_known_key(std::string_view key) {
  return std::find(std::begin(Config::kKnownKeys), std::end(Config::kKnownKeys), key) !=
         std::end(Config::kKnownKeys);
}

}  // namespace

Config Config::parse(std::string_view text, std::string_view source) {
  Config cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::config_error,
                  std::string(source) + ":" + std::to_string(lineno) + ": expected KEY=value");
    }
    auto key = std::string(trim(t.substr(0, eq)));
    auto value = std::string(trim(t.substr(eq + 1)));
    if (!is_known_key(key)) {
      throw Error(ErrorCode::config_error,
                  std::string(source) + ":" + std::to_string(lineno) + ": unknown key " + key);
    }
    cfg.set(std::move(key), std::move(value));
  }
  return cfg;
}

Config Config::load(const std::optional<std::filesystem::path>& file, bool use_environment) {
  Config cfg;
  if (use_environment) {
    for (auto key : kKnownKeys) {
      if (const char* v = std::getenv(std::string(key).c_str())) cfg.set(std::string(key), v);
    }
  }
  if (file) {
    std::ifstream in(*file, std::ios::binary);
    if (!in) throw Error(ErrorCode::config_error, "cannot read config file " + file->string());
    std::ostringstream buf;
    buf << in.rdbuf();
    cfg.merge(parse(buf.str(), file->string()));
  }
  return cfg;
}

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::optional<std::string> Config::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::string Config::get_or(std::string_view key, std::string_view fallback) const {
  auto v = get(key);
  return v ? *v : std::string(fallback);
}

long Config::get_int(std::string_view key, long fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  long out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw Error(ErrorCode::config_error, std::string(key) + " must be an integer, got '" + *v + "'");
  }
  return out;
}

PipelineConfig pipeline_config_from(const Config& config) {
  PipelineConfig pc;
  pc.relevance_threshold = static_cast<int>(config.get_int("RELEVANCE_THRESHOLD", 5));
  pc.max_refinements = static_cast<int>(config.get_int("MAX_REFINEMENTS", 3));
  long budget = config.get_int("CONTEXT_BUDGET_CHARS", static_cast<long>(kDefaultContextBudget));
  if (budget < 0) throw Error(ErrorCode::config_error, "CONTEXT_BUDGET_CHARS must be >= 0");
  pc.context_budget = static_cast<std::size_t>(budget);
  if (pc.relevance_threshold < 1 || pc.relevance_threshold > 10) {
    throw Error(ErrorCode::config_error, "RELEVANCE_THRESHOLD must be within 1..10");
  }
  if (pc.max_refinements < 0) throw Error(ErrorCode::config_error, "MAX_REFINEMENTS must be >= 0");
  if (auto kw = config.get("CODE_KEYWORDS")) {
    pc.scan_rules.code_keywords.clear();
    std::stringstream in(*kw);
    std::string item;
    while (std::getline(in, item, ',')) {
      auto t = trim(item);
      if (!t.empty()) pc.scan_rules.code_keywords.emplace_back(t);
    }
  }
  return pc;
}

PromptTemplate prompt_templates_from(const Config& config) {
  if (auto dir = config.get("TEMPLATE_DIR")) return load_prompt_templates(*dir);
  return PromptTemplate::defaults();
}

std::unique_ptr<LlmClient> make_llm_client(const Config& config) {
  auto backend = config.get_or("LLM_BACKEND", "http");
  if (backend == "mock") {
    auto path = config.get("MOCK_SCRIPT_PATH");
    if (!path) throw Error(ErrorCode::config_error, "LLM_BACKEND=mock requires MOCK_SCRIPT_PATH");
    return std::make_unique<MockLlmClient>(load_mock_script(*path));
  }
  if (backend != "http") {
    throw Error(ErrorCode::config_error, "LLM_BACKEND must be http or mock, got '" + backend + "'");
  }
  HttpBackendConfig hc;
  hc.endpoint = config.get_or("LLM_ENDPOINT", "");
  hc.model = config.get_or("LLM_MODEL", "");
  hc.api_key = config.get_or("LLM_API_KEY", "");
  return std::make_unique<HttpLlmClient>(std::move(hc));
}

BindAddress parse_bind_address(std::string_view text) {
  BindAddress addr;
  auto t = trim(text);
  if (t.empty()) return addr;
  auto colon = t.rfind(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::config_error, "BIND_ADDR must be host:port, got '" + std::string(t) + "'");
  }
  addr.host = std::string(t.substr(0, colon));
  auto port_text = t.substr(colon + 1);
  int port = 0;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535 ||
      addr.host.empty()) {
    throw Error(ErrorCode::config_error, "invalid BIND_ADDR '" + std::string(t) + "'");
  }
  addr.port = port;
  return addr;
}

}  // namespace socratic
