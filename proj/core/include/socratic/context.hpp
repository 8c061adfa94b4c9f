#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "socratic/domain.hpp"

namespace socratic {

inline constexpr std::size_t kMaxIngestBytes = 256 * 1024;
inline constexpr std::size_t kDefaultContextBudget = 24000;
inline constexpr std::size_t kBuildLogTailLines = 100;
inline constexpr std::string_view kTruncationMarker = "[...truncated...]";
inline constexpr std::string_view kBuildLogItem = "BUILD_LOG";

struct TestResult {
  std::string test_name;
  bool passed = false;
  std::string message;

  friend bool operator==(const TestResult&, const TestResult&) = default;
};

struct RepositorySnapshot {
  /// Relative forward-slash path -> UTF-8 content.
  std::map<std::string, std::string> files;
  Timestamp captured_at{};

  bool contains(std::string_view path) const { return files.find(std::string(path)) != files.end(); }
};

struct ExerciseFixture {
  std::string exercise_id;
  std::string title;
  std::string problem_statement;
  RepositorySnapshot repository;
  std::optional<std::string> build_log;
  std::optional<std::vector<TestResult>> test_feedback;
  /// Ingestion notes, e.g. files skipped for size or encoding.
  std::vector<std::string> warnings;
};

/// Reads <root>/problem.md, <root>/repo/**, and the optional buildlog.txt and
/// tests.json. The exercise id is the directory name.
ExerciseFixture load_fixture(const std::filesystem::path& root);

/// "- <path>" per file in lexicographic order, plus "- BUILD_LOG" when a build
/// log exists. No trailing newline.
std::string render_file_listing(const RepositorySnapshot& snapshot, bool build_log_available);

/// One "PASS|FAIL <name>: <message>" line per test; empty when there is no feedback.
std::string render_test_feedback(const std::optional<std::vector<TestResult>>& feedback);

struct BundleFile {
  std::string path;
  std::string content;
  bool truncated = false;

  friend bool operator==(const BundleFile&, const BundleFile&) = default;
};

struct ContextBundle {
  std::string problem_statement;
  std::vector<BundleFile> selected_file_contents;
  std::string test_feedback_rendered;
  std::optional<std::string> build_log_excerpt;
  /// Sum of the UTF-8 code point lengths of every part above (paths excluded).
  std::size_t total_chars = 0;
};

/// Packs the grounding context under a character budget. Priority when the
/// budget binds: problem statement (never cut) > test feedback > selected
/// files in selection order > build log tail. A cut item ends with the
/// truncation marker line; an item with no room for the marker is dropped.
/// The problem statement alone may exceed the budget.
ContextBundle assemble_context(const ExerciseFixture& fixture,
                               std::span<const std::string> selected, bool include_build_log,
                               std::size_t budget = kDefaultContextBudget);

/// Text form embedded in the generation prompt.
std::string render_bundle(const ContextBundle& bundle);

// UTF-8 helpers; lengths and cuts are in code points.
bool is_valid_utf8(std::string_view text);
std::size_t utf8_length(std::string_view text);
std::string utf8_prefix(std::string_view text, std::size_t code_points);
std::string utf8_suffix(std::string_view text, std::size_t code_points);

/// Relative, forward-slash, no empty / "." / ".." segments, no leading slash.
bool is_normalized_repo_path(std::string_view path);

struct ExerciseSummary {
  std::string exercise_id;
  std::string title;
};

/// Fixtures discovered under one directory, loaded lazily and then shared
/// read-only.
class FixtureCatalog {
 public:
  explicit FixtureCatalog(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::vector<ExerciseSummary> list() const;
  bool contains(std::string_view exercise_id) const;
  /// Throws Error(unknown_exercise) when no such fixture directory exists.
  std::shared_ptr<const ExerciseFixture> get(std::string_view exercise_id) const;

 private:
  std::filesystem::path root_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<const ExerciseFixture>, std::less<>> cache_;
};

}  // namespace socratic
