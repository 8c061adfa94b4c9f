#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "socratic/domain.hpp"

namespace socratic {

struct SessionSummary {
  std::string session_id;
  std::string exercise_id;
  std::string student_id;
  SessionState state = SessionState::active;
  std::size_t message_count = 0;
  Timestamp created_at{};
};

void to_json(nlohmann::json& j, const SessionSummary& s);

/// Flat-file store:
///   <base>/sessions/<session_id>.json
///   <base>/traces/<session_id>/<sequence>.json
/// Every write goes to a temp file in the target directory and is renamed
/// into place, so readers only ever see complete records.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path base_dir);

  const std::filesystem::path& base_dir() const { return base_; }

  void save_session(const Session& session);
  /// Throws not_found for unknown ids, corrupt_record naming the file when it
  /// does not parse.
  Session load_session(std::string_view session_id) const;
  bool has_session(std::string_view session_id) const;

  void save_trace(std::string_view session_id, const PipelineTrace& trace);
  PipelineTrace load_trace(std::string_view session_id, std::uint64_t sequence) const;

  /// Sorted by session id. Corrupt files are skipped.
  std::vector<SessionSummary> list_sessions(
      const std::optional<std::string>& student_id = std::nullopt) const;

  std::filesystem::path session_path(std::string_view session_id) const;
  std::filesystem::path trace_path(std::string_view session_id, std::uint64_t sequence) const;

  /// Test seam: runs after the temp file is fully written and before the
  /// rename. Throwing from it simulates a crash at that point.
  using CommitHook = std::function<void(const std::filesystem::path& temp,
                                        const std::filesystem::path& target)>;
  void set_commit_hook(CommitHook hook) { commit_hook_ = std::move(hook); }

 private:
  std::shared_ptr<std::mutex> writer_lock(const std::string& session_id);
  void write_atomically(const std::filesystem::path& target, const std::string& content);

  std::filesystem::path base_;
  std::mutex locks_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
  CommitHook commit_hook_;
};

/// Canonical on-disk/JSON text for a record: 2-space indent, trailing newline.
std::string to_canonical_json(const nlohmann::json& value);

}  // namespace socratic
