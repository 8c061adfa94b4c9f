#pragma once

#include <memory>
#include <string>

#include "socratic/error.hpp"
#include "socratic/service.hpp"

namespace socratic {

struct ServerOptions {
  /// Value for Access-Control-Allow-Origin; empty disables CORS headers.
  std::string cors_origin;
};

/// HTTP status an Error maps to at the API boundary.
int http_status_for(ErrorCode code);

/// JSON facade over TutorService:
///   POST /api/sessions                          {exercise_id, student_id} -> 201 session
///   GET  /api/sessions/{id}                     -> 200 session
///   POST /api/sessions/{id}/messages            {content} -> 200 {tutor_message, outcome, trace_sequence}
///   GET  /api/sessions/{id}/traces/{sequence}   -> 200 trace
///   GET  /api/exercises                         -> 200 [{exercise_id, title}]
/// Error bodies are always {"code", "message"}.
class ApiServer {
 public:
  ApiServer(TutorService& service, ServerOptions options);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds without serving. Port 0 picks a free port; returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); blocks the calling thread.
  void serve();
  /// Stops accepting and lets in-flight handlers finish.
  void stop();
  bool is_running() const;
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace socratic
