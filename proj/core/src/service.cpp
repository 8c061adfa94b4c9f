#include "socratic/service.hpp"

#include "socratic/error.hpp"

namespace socratic {

TutorService::TutorService(const FixtureCatalog& catalog, SessionStore& store, LlmClient& client,
                           PipelineConfig config, const PromptTemplate& templates)
    : catalog_(catalog), store_(store), pipeline_(client, std::move(config), templates) {}

Session TutorService::create_session(const std::string& exercise_id, const std::string& student_id) {
  if (!catalog_.contains(exercise_id)) {
    throw Error(ErrorCode::unknown_exercise, "unknown exercise '" + exercise_id + "'");
  }
  catalog_.get(exercise_id);  // must be loadable, not merely present
  auto session = socratic::create_session(exercise_id, student_id);
  store_.save_session(session);
  return session;
}

PipelineTrace TutorService::get_trace(std::string_view session_id, std::uint64_t sequence) const {
  if (!store_.has_session(session_id)) {
    throw Error(ErrorCode::not_found, "no session '" + std::string(session_id) + "'");
  }
  return store_.load_trace(session_id, sequence);
}

std::shared_ptr<std::mutex> TutorService::turn_lock(std::string_view session_id) {
  std::lock_guard<std::mutex> guard(locks_mutex_);
  auto it = turn_locks_.find(session_id);
  if (it == turn_locks_.end()) {
    it = turn_locks_.emplace(std::string(session_id), std::make_shared<std::mutex>()).first;
  }
  return it->second;
}

PostResult TutorService::post_message(std::string_view session_id, std::string_view content,
                                      WhenBusy when_busy) {
  if (!store_.has_session(session_id)) {
    throw Error(ErrorCode::not_found, "no session '" + std::string(session_id) + "'");
  }
  auto lock = turn_lock(session_id);
  std::unique_lock<std::mutex> guard(*lock, std::defer_lock);
  if (when_busy == WhenBusy::reject) {
    if (!guard.try_lock()) {
      throw Error(ErrorCode::busy, "a message for session '" + std::string(session_id) +
                                       "' is already being processed");
    }
  } else {
    guard.lock();
  }

  auto session = store_.load_session(session_id);
  auto fixture = catalog_.get(session.exercise_id);
  auto turn = pipeline_.handle_message(session, *fixture, content);

  // Boundary re-check: an answered reply must still pass the static scan.
  if (turn.trace.outcome == Outcome::answered &&
      !static_scan(turn.reply, pipeline_.config().scan_rules).passed) {
    turn.trace.outcome = Outcome::fallback;
    turn.trace.warnings.push_back("answered reply failed the boundary scan; replaced with fallback");
    turn.reply = std::string(kFallbackReply);
    turn.session.messages.back().content = turn.reply;
  }

  store_.save_trace(session.session_id, turn.trace);
  store_.save_session(turn.session);

  PostResult result;
  result.tutor_message = turn.session.messages.back();
  result.outcome = turn.trace.outcome;
  result.trace_sequence = turn.trace.message_sequence;
  result.backend_error = turn.trace.error;
  return result;
}

}  // namespace socratic
