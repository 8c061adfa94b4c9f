#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "socratic/context.hpp"
#include "socratic/pipeline.hpp"
#include "socratic/store.hpp"

namespace socratic {

struct PostResult {
  Message tutor_message;
  Outcome outcome = Outcome::fallback;
  std::uint64_t trace_sequence = 0;
  /// Set when the backend failed and the reply is the unavailability notice.
  std::optional<std::string> backend_error;
};

/// Ties fixtures, the store, and the pipeline together. Holds no session
/// state of its own apart from which sessions currently have a message in
/// flight.
class TutorService {
 public:
  enum class WhenBusy { wait, reject };

  TutorService(const FixtureCatalog& catalog, SessionStore& store, LlmClient& client,
               PipelineConfig config, const PromptTemplate& templates = PromptTemplate::defaults());

  std::vector<ExerciseSummary> exercises() const { return catalog_.list(); }

  /// Throws unknown_exercise when the fixture cannot be loaded.
  Session create_session(const std::string& exercise_id, const std::string& student_id);
  Session get_session(std::string_view session_id) const { return store_.load_session(session_id); }
  PipelineTrace get_trace(std::string_view session_id, std::uint64_t sequence) const;

  /// Runs one student turn and persists trace and session. With
  /// WhenBusy::reject a concurrent call for the same session throws
  /// Error(busy); with WhenBusy::wait it queues.
  PostResult post_message(std::string_view session_id, std::string_view content,
                          WhenBusy when_busy = WhenBusy::wait);

 private:
  std::shared_ptr<std::mutex> turn_lock(std::string_view session_id);

  const FixtureCatalog& catalog_;
  SessionStore& store_;
  TutorPipeline pipeline_;
  std::mutex locks_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>, std::less<>> turn_locks_;
};

}  // namespace socratic
