#pragma once

#include <atomic>
#include <condition_variable>
#include <mutex>

#include "socratic/error.hpp"
#include "socratic/llm.hpp"

namespace socratic::testing {

// Always-on-topic scripted tutor whose relevance call can be held open, so a
// second request can arrive while the first is in flight.
class HoldableClient final : public LlmClient {
 public:
  explicit HoldableClient(std::string hint) : hint_(std::move(hint)) {}

  LlmExchange complete(const ChatPrompt& p) override {
    validate_prompt(p);
    if (p.step_tag == StepTag::relevance) {
      std::unique_lock lock(m_);
      entered_ = true;
      cv_.notify_all();
      cv_.wait(lock, [&] { return !hold_; });
    }
    if (down) throw Error(ErrorCode::backend_unavailable, "backend down");
    std::string reply;
    switch (p.step_tag) {
      case StepTag::relevance: reply = "7"; break;
      case StepTag::file_selection: reply = "src/BubbleSort.java"; break;
      case StepTag::generation: reply = hint_; break;
      case StepTag::self_check: reply = "PASS"; break;
    }
    return {p, reply, 0, Backend::mock};
  }
  void hold() {
    std::lock_guard lock(m_);
    hold_ = true;
    entered_ = false;
  }
  void wait_entered() {
    std::unique_lock lock(m_);
    cv_.wait(lock, [&] { return entered_; });
  }
  void release() {
    std::lock_guard lock(m_);
    hold_ = false;
    cv_.notify_all();
  }

  std::atomic<bool> down{false};

 private:
  std::string hint_;
  std::mutex m_;
  std::condition_variable cv_;
  bool hold_ = false;
  bool entered_ = false;
};

}  // namespace socratic::testing
