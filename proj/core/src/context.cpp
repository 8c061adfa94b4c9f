#include "socratic/context.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "socratic/error.hpp"

namespace fs = std::filesystem;

namespace socratic {
namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string title_from_statement(std::string_view statement, std::string_view fallback) {
  std::istringstream in{std::string(statement)};
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      t.remove_prefix(std::min(t.find_first_not_of('#'), t.size()));
      t = trim(t);
      if (!t.empty()) return std::string(t);
    }
    break;
  }
  return std::string(fallback);
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

// Fits `full` into `room` code points. Returns nullopt when not even the
// marker line fits.
std::optional<std::string> fit_head(std::string_view full, std::size_t room, bool& truncated) {
  const std::size_t len = utf8_length(full);
  truncated = false;
  if (len <= room) return std::string(full);
  const std::size_t overhead = kTruncationMarker.size() + 1;
  if (room < overhead) return std::nullopt;
  truncated = true;
  return utf8_prefix(full, room - overhead) + "\n" + std::string(kTruncationMarker);
}

}  // namespace

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra;
    std::uint32_t cp;
    if (c < 0x80) {
      if (c == 0) return false;
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= text.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      auto cc = static_cast<unsigned char>(text[i + k]);
      if (!is_continuation(cc)) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(
      text.begin(), text.end(), [](char c) { return !is_continuation(static_cast<unsigned char>(c)); }));
}

std::string utf8_prefix(std::string_view text, std::size_t code_points) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_continuation(static_cast<unsigned char>(text[i]))) {
      if (seen == code_points) return std::string(text.substr(0, i));
      ++seen;
    }
  }
  return std::string(text);
}

std::string utf8_suffix(std::string_view text, std::size_t code_points) {
  const std::size_t len = utf8_length(text);
  if (code_points >= len) return std::string(text);
  std::size_t skip = len - code_points;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_continuation(static_cast<unsigned char>(text[i]))) {
      if (seen == skip) return std::string(text.substr(i));
      ++seen;
    }
  }
  return {};
}

bool is_normalized_repo_path(std::string_view path) {
  if (path.empty() || path.front() == '/' || path.back() == '/') return false;
  if (path.find('\\') != std::string_view::npos) return false;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    auto seg = path.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (seg.empty() || seg == "." || seg == "..") return false;
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return true;
}

ExerciseFixture load_fixture(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::unreadable_root, "fixture root is not a readable directory: " + root.string());
  }
  ExerciseFixture fx;
  fx.exercise_id = root.filename().string();
  if (fx.exercise_id.empty()) fx.exercise_id = root.parent_path().filename().string();

  auto statement = read_file(root / "problem.md");
  if (!statement || trim(*statement).empty()) {
    throw Error(ErrorCode::missing_problem_statement, "missing or empty problem.md in " + root.string());
  }
  fx.problem_statement = std::move(*statement);
  fx.title = title_from_statement(fx.problem_statement, fx.exercise_id);

  fx.repository.captured_at = now_utc();
  const fs::path repo = root / "repo";
  if (fs::is_directory(repo, ec)) {
    fs::recursive_directory_iterator it(repo, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw Error(ErrorCode::unreadable_root, "cannot read " + repo.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
      if (ec) throw Error(ErrorCode::unreadable_root, "cannot read " + repo.string() + ": " + ec.message());
      const auto& entry = *it;
      auto rel = entry.path().lexically_relative(repo).generic_string();
      if (entry.is_directory() && entry.path().filename() == ".git") {
        it.disable_recursion_pending();
        continue;
      }
      if (entry.is_symlink()) {
        fx.warnings.push_back("skipped " + rel + ": symbolic link");
        continue;
      }
      if (!entry.is_regular_file()) continue;
      if (!is_normalized_repo_path(rel)) {
        fx.warnings.push_back("skipped " + rel + ": path not normalizable");
        continue;
      }
      auto size = entry.file_size(ec);
      if (ec || size > kMaxIngestBytes) {
        fx.warnings.push_back("skipped " + rel + ": larger than " + std::to_string(kMaxIngestBytes) +
                              " bytes");
        continue;
      }
      auto content = read_file(entry.path());
      if (!content) {
        fx.warnings.push_back("skipped " + rel + ": unreadable");
        continue;
      }
      if (!is_valid_utf8(*content)) {
        fx.warnings.push_back("skipped " + rel + ": not UTF-8 text");
        continue;
      }
      fx.repository.files.emplace(std::move(rel), std::move(*content));
    }
  }

  if (auto log = read_file(root / "buildlog.txt")) fx.build_log = std::move(*log);

  if (fs::exists(root / "tests.json", ec)) {
    auto text = read_file(root / "tests.json");
    if (!text) throw Error(ErrorCode::unreadable_root, "cannot read tests.json in " + root.string());
    auto doc = nlohmann::json::parse(*text, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
      throw Error(ErrorCode::parse_error, (root / "tests.json").string() + ": expected a JSON array");
    }
    std::vector<TestResult> results;
    for (const auto& item : doc) {
      try {
        results.push_back({item.at("test_name").get<std::string>(), item.at("passed").get<bool>(),
                           item.value("message", std::string())});
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse_error, (root / "tests.json").string() + ": " + e.what());
      }
    }
    fx.test_feedback = std::move(results);
  }
  return fx;
}

std::string render_file_listing(const RepositorySnapshot& snapshot, bool build_log_available) {
  std::string out;
  // std::map iterates in lexicographic (byte) order already
  for (const auto& [path, _] : snapshot.files) {
    if (!out.empty()) out += '\n';
    out += "- " + path;
  }
  if (build_log_available) {
    if (!out.empty()) out += '\n';
    out += "- " + std::string(kBuildLogItem);
  }
  return out;
}

std::string render_test_feedback(const std::optional<std::vector<TestResult>>& feedback) {
  std::string out;
  if (!feedback) return out;
  for (const auto& t : *feedback) {
    if (!out.empty()) out += '\n';
    out += (t.passed ? "PASS " : "FAIL ") + t.test_name + ": " + t.message;
  }
  return out;
}

ContextBundle assemble_context(const ExerciseFixture& fixture, std::span<const std::string> selected,
                               bool include_build_log, std::size_t budget) {
  for (const auto& path : selected) {
    if (!fixture.repository.contains(path)) {
      throw Error(ErrorCode::unknown_path, "selected path not in snapshot: " + path);
    }
  }

  ContextBundle bundle;
  bundle.problem_statement = fixture.problem_statement;
  std::size_t used = utf8_length(bundle.problem_statement);
  auto room = [&] { return used >= budget ? std::size_t{0} : budget - used; };

  bool truncated = false;
  if (auto fb = fit_head(render_test_feedback(fixture.test_feedback), room(), truncated)) {
    bundle.test_feedback_rendered = std::move(*fb);
    used += utf8_length(bundle.test_feedback_rendered);
  }

  for (const auto& path : selected) {
    const auto& content = fixture.repository.files.at(path);
    if (auto fitted = fit_head(content, room(), truncated)) {
      used += utf8_length(*fitted);
      bundle.selected_file_contents.push_back({path, std::move(*fitted), truncated});
    }
  }

  if (include_build_log && fixture.build_log) {
    auto lines = split_lines(*fixture.build_log);
    const bool cut = lines.size() > kBuildLogTailLines;
    std::string tail;
    if (!cut) {
      tail = *fixture.build_log;
    } else {
      for (std::size_t i = lines.size() - kBuildLogTailLines; i < lines.size(); ++i) {
        if (!tail.empty()) tail += '\n';
        tail += lines[i];
      }
    }
    const std::size_t overhead = kTruncationMarker.size() + 1;
    const std::size_t tail_len = utf8_length(tail);
    if (!cut && tail_len <= room()) {
      bundle.build_log_excerpt = tail;
    } else if (room() >= overhead) {
      bundle.build_log_excerpt =
          utf8_suffix(tail, std::min(tail_len, room() - overhead)) + "\n" + std::string(kTruncationMarker);
    }
    if (bundle.build_log_excerpt) used += utf8_length(*bundle.build_log_excerpt);
  }

  bundle.total_chars = used;
  return bundle;
}

std::string render_bundle(const ContextBundle& bundle) {
  std::string out = "### Problem statement\n" + bundle.problem_statement + "\n";
  out += "\n### Automated test feedback\n";
  out += bundle.test_feedback_rendered.empty() ? "(none)" : bundle.test_feedback_rendered;
  out += '\n';
  for (const auto& f : bundle.selected_file_contents) {
    out += "\n### File: " + f.path + "\n" + f.content + "\n";
  }
  if (bundle.build_log_excerpt) {
    out += "\n### Build log (latest submission)\n" + *bundle.build_log_excerpt + "\n";
  }
  return out;
}

// --- catalog -----------------------------------------------------------------

FixtureCatalog::FixtureCatalog(fs::path root) : root_(std::move(root)) {}

std::vector<ExerciseSummary> FixtureCatalog::list() const {
  std::vector<ExerciseSummary> out;
  std::error_code ec;
  if (!fs::is_directory(root_, ec)) return out;
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_, ec)) {
    auto id = entry.path().filename().string();
    if (entry.is_directory() && is_valid_identifier(id) && fs::exists(entry.path() / "problem.md")) {
      ids.push_back(id);
    }
  }
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    try {
      out.push_back({id, get(id)->title});
    } catch (const Error&) {
      // unloadable fixtures are not offered
    }
  }
  return out;
}

bool FixtureCatalog::contains(std::string_view exercise_id) const {
  std::error_code ec;
  return is_valid_identifier(exercise_id) &&
         fs::exists(root_ / std::string(exercise_id) / "problem.md", ec);
}

std::shared_ptr<const ExerciseFixture> FixtureCatalog::get(std::string_view exercise_id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (auto it = cache_.find(exercise_id); it != cache_.end()) return it->second;
  if (!is_valid_identifier(exercise_id) || !fs::is_directory(root_ / std::string(exercise_id))) {
    throw Error(ErrorCode::unknown_exercise, "unknown exercise '" + std::string(exercise_id) + "'");
  }
  auto fixture = std::make_shared<const ExerciseFixture>(load_fixture(root_ / std::string(exercise_id)));
  cache_.emplace(std::string(exercise_id), fixture);
  return fixture;
}

}  // namespace socratic
