#include "socratic/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "socratic/error.hpp"

namespace fs = std::filesystem;

namespace socratic {
namespace {

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename T>
T parse_record(const fs::path& path) {
  auto text = read_all(path);
  try {
    return nlohmann::json::parse(text).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::corrupt_record, "corrupt record " + path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::corrupt_record, "corrupt record " + path.string() + ": " + e.what());
  }
}

void write_fd_fully(int fd, const std::string& content, const fs::path& path) {
  std::size_t off = 0;
  while (off < content.size()) {
    auto n = ::write(fd, content.data() + off, content.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::io_error, "write failed for " + path.string() + ": " + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace

void to_json(nlohmann::json& j, const SessionSummary& s) {
  j = nlohmann::json{{"session_id", s.session_id},
                     {"exercise_id", s.exercise_id},
                     {"student_id", s.student_id},
                     {"state", s.state},
                     {"message_count", s.message_count},
                     {"created_at", format_timestamp(s.created_at)}};
}

std::string to_canonical_json(const nlohmann::json& value) { return value.dump(2) + "\n"; }

SessionStore::SessionStore(fs::path base_dir) : base_(std::move(base_dir)) {
  std::error_code ec;
  fs::create_directories(base_ / "sessions", ec);
  if (!ec) fs::create_directories(base_ / "traces", ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot initialize store at " + base_.string() + ": " + ec.message());
}

fs::path SessionStore::session_path(std::string_view session_id) const {
  return base_ / "sessions" / (std::string(session_id) + ".json");
}

fs::path SessionStore::trace_path(std::string_view session_id, std::uint64_t sequence) const {
  return base_ / "traces" / std::string(session_id) / (std::to_string(sequence) + ".json");
}

std::shared_ptr<std::mutex> SessionStore::writer_lock(const std::string& session_id) {
  std::lock_guard<std::mutex> guard(locks_mutex_);
  auto& slot = locks_[session_id];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

void SessionStore::write_atomically(const fs::path& target, const std::string& content) {
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + target.parent_path().string());

  auto temp = target;
  temp += ".tmp." + std::to_string(::getpid()) + "." + generate_session_id().substr(0, 8);
  int fd = ::open(temp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::io_error, "cannot create " + temp.string() + ": " + std::strerror(errno));
  try {
    write_fd_fully(fd, content, temp);
    if (::fsync(fd) != 0) throw Error(ErrorCode::io_error, "fsync failed for " + temp.string());
  } catch (...) {
    ::close(fd);
    fs::remove(temp, ec);
    throw;
  }
  ::close(fd);

  try {
    if (commit_hook_) commit_hook_(temp, target);
  } catch (...) {
    fs::remove(temp, ec);
    throw;
  }
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw Error(ErrorCode::io_error, "cannot commit " + target.string());
  }
}

void SessionStore::save_session(const Session& session) {
  if (!is_valid_identifier(session.session_id)) {
    throw Error(ErrorCode::invalid_argument, "invalid session id '" + session.session_id + "'");
  }
  auto lock = writer_lock(session.session_id);
  std::lock_guard<std::mutex> guard(*lock);
  write_atomically(session_path(session.session_id), to_canonical_json(nlohmann::json(session)));
}

bool SessionStore::has_session(std::string_view session_id) const {
  std::error_code ec;
  return is_valid_identifier(session_id) && fs::is_regular_file(session_path(session_id), ec);
}

Session SessionStore::load_session(std::string_view session_id) const {
  if (!has_session(session_id)) {
    throw Error(ErrorCode::not_found, "no session '" + std::string(session_id) + "'");
  }
  return parse_record<Session>(session_path(session_id));
}

void SessionStore::save_trace(std::string_view session_id, const PipelineTrace& trace) {
  if (!is_valid_identifier(session_id)) {
    throw Error(ErrorCode::invalid_argument, "invalid session id '" + std::string(session_id) + "'");
  }
  auto lock = writer_lock(std::string(session_id));
  std::lock_guard<std::mutex> guard(*lock);
  write_atomically(trace_path(session_id, trace.message_sequence),
                   to_canonical_json(nlohmann::json(trace)));
}

PipelineTrace SessionStore::load_trace(std::string_view session_id, std::uint64_t sequence) const {
  std::error_code ec;
  if (!is_valid_identifier(session_id) || !fs::is_regular_file(trace_path(session_id, sequence), ec)) {
    throw Error(ErrorCode::not_found, "no trace " + std::to_string(sequence) + " for session '" +
                                          std::string(session_id) + "'");
  }
  return parse_record<PipelineTrace>(trace_path(session_id, sequence));
}

std::vector<SessionSummary> SessionStore::list_sessions(const std::optional<std::string>& student_id) const {
  std::vector<SessionSummary> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(base_ / "sessions", ec)) {
    const auto& p = entry.path();
    if (p.extension() != ".json" || !entry.is_regular_file()) continue;
    Session s;
    try {
      s = parse_record<Session>(p);
    } catch (const Error&) {
      continue;
    }
    if (student_id && s.student_id != *student_id) continue;
    out.push_back({s.session_id, s.exercise_id, s.student_id, s.state, s.messages.size(), s.created_at});
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.session_id < b.session_id; });
  return out;
}

}  // namespace socratic
