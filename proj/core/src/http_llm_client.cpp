#include <thread>

#include <httplib.h>

#include "socratic/error.hpp"
#include "socratic/llm.hpp"

namespace socratic {
namespace {

bool is_transient(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpLlmClient::HttpLlmClient(HttpBackendConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  auto scheme_end = config_.endpoint.find("://");
  if (config_.endpoint.empty() || scheme_end == std::string::npos) {
    throw Error(ErrorCode::config_error,
                "LLM_ENDPOINT must be an absolute http(s) URL, got '" + config_.endpoint + "'");
  }
  auto scheme = config_.endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::config_error, "unsupported LLM_ENDPOINT scheme '" + scheme + "'");
  }
  auto path_start = config_.endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_url_ = config_.endpoint;
    path_ = "/v1/chat/completions";
  } else {
    base_url_ = config_.endpoint.substr(0, path_start);
    path_ = config_.endpoint.substr(path_start);
  }
  if (config_.model.empty()) throw Error(ErrorCode::config_error, "LLM_MODEL is not set");
}

nlohmann::json HttpLlmClient::request_body(const ChatPrompt& prompt) const {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : prompt.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  return nlohmann::json{{"model", config_.model},
                        {"messages", std::move(messages)},
                        {"temperature", prompt.temperature},
                        {"max_tokens", prompt.max_tokens},
                        {"stream", false}};
}

LlmExchange HttpLlmClient::complete(const ChatPrompt& prompt) {
  validate_prompt(prompt);
  const auto body = request_body(prompt).dump();

  httplib::Client client(base_url_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  const auto started = std::chrono::steady_clock::now();
  std::string last_failure;
  for (std::size_t attempt = 0;; ++attempt) {
    auto res = client.Post(path_, headers, body, "application/json");
    bool transient = false;
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      transient = true;
    } else if (res->status == 200) {
      nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
      if (doc.is_discarded()) {
        throw Error(ErrorCode::backend_unavailable, "backend returned invalid JSON");
      }
      const auto* content = [&]() -> const nlohmann::json* {
        if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
          return nullptr;
        }
        const auto& choice = doc["choices"][0];
        if (!choice.contains("message") || !choice["message"].contains("content")) return nullptr;
        return &choice["message"]["content"];
      }();
      if (content == nullptr || !(content->is_string() || content->is_null())) {
        throw Error(ErrorCode::backend_unavailable, "backend response has no choices[0].message.content");
      }
      LlmExchange ex;
      ex.prompt = prompt;
      ex.completion = content->is_null() ? std::string() : content->get<std::string>();
      ex.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - started)
                          .count();
      ex.backend = Backend::http;
      return ex;
    } else {
      last_failure = "HTTP " + std::to_string(res->status);
      transient = is_transient(res->status);
    }

    if (!transient) {
      throw Error(ErrorCode::backend_unavailable, "backend rejected request: " + last_failure);
    }
    if (attempt >= config_.backoff.size()) {
      throw Error(ErrorCode::backend_unavailable,
                  "backend unavailable after " + std::to_string(attempt + 1) +
                      " attempts: " + last_failure);
    }
    sleeper_(config_.backoff[attempt]);
  }
}

}  // namespace socratic
