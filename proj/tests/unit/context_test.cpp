#include <gtest/gtest.h>

#include <random>

#include "socratic/context.hpp"
#include "socratic/error.hpp"
#include "test_support.hpp"

using namespace socratic;
using namespace socratic::testing;

namespace {

// Independent code point counter for the oracle: decode lead bytes by width.
std::size_t count_code_points(const std::string& s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    auto c = static_cast<unsigned char>(s[i]);
    i += c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    ++n;
  }
  return n;
}

std::size_t oracle_total(const ContextBundle& b) {
  std::size_t n = count_code_points(b.problem_statement) + count_code_points(b.test_feedback_rendered);
  for (const auto& f : b.selected_file_contents) n += count_code_points(f.content);
  if (b.build_log_excerpt) n += count_code_points(*b.build_log_excerpt);
  return n;
}

ExerciseFixture synthetic_fixture(std::size_t file_size, std::size_t log_lines) {
  ExerciseFixture fx;
  fx.exercise_id = "synthetic";
  fx.title = "Synthetic";
  fx.problem_statement = "Sort the array. \xc3\xbc\xe2\x82\xac";
  for (int i = 0; i < 4; ++i) {
    std::string body;
    while (body.size() < file_size) body += "int x" + std::to_string(i) + " = 1; // \xe2\x9c\x93\n";
    fx.repository.files["src/F" + std::to_string(i) + ".java"] = body;
  }
  std::string log;
  for (std::size_t i = 0; i < log_lines; ++i) log += "log line " + std::to_string(i) + "\n";
  fx.build_log = log;
  fx.test_feedback = std::vector<TestResult>{{"t1", false, "boom"}, {"t2", true, "ok"}};
  return fx;
}

const std::vector<std::string> kAllFiles{"src/F0.java", "src/F1.java", "src/F2.java", "src/F3.java"};

bool ends_with_marker(const std::string& s) {
  const std::string m = "\n[...truncated...]";
  return s.size() >= m.size() && s.compare(s.size() - m.size(), m.size(), m) == 0;
}

}  // namespace

TEST(Fixture, LoadsBubbleSort) {
  auto fx = load_fixture(fixture_dir("bubblesort"));
  EXPECT_EQ(fx.exercise_id, "bubblesort");
  EXPECT_EQ(fx.title, "Bubble Sort");
  EXPECT_TRUE(fx.repository.contains("src/BubbleSort.java"));
  EXPECT_TRUE(fx.repository.contains("test/BubbleSortTest.java"));
  ASSERT_TRUE(fx.build_log.has_value());
  ASSERT_TRUE(fx.test_feedback.has_value());
  EXPECT_EQ(fx.test_feedback->size(), 3u);
  EXPECT_EQ(render_file_listing(fx.repository, true),
            "- src/BubbleSort.java\n- src/Main.java\n- test/BubbleSortTest.java\n- BUILD_LOG");
}

TEST(Fixture, SkipsOversizedBinaryAndGitFiles) {
  TempDir dir;
  auto root = dir.path() / "ex1";
  write_file(root / "problem.md", "No heading here\n");
  write_file(root / "repo/ok.txt", "fine");
  write_file(root / "repo/big.txt", std::string(1024 * 1024, 'a'));
  write_file(root / "repo/bin.dat", std::string("a\0b", 3));
  write_file(root / "repo/latin1.txt", "caf\xe9");
  write_file(root / "repo/.git/config", "[core]");
  auto fx = load_fixture(root);
  EXPECT_EQ(fx.title, "ex1");
  EXPECT_EQ(fx.repository.files.size(), 1u);
  EXPECT_TRUE(fx.repository.contains("ok.txt"));
  EXPECT_EQ(fx.warnings.size(), 3u);
  EXPECT_FALSE(fx.build_log.has_value());
  EXPECT_EQ(render_file_listing(fx.repository, false), "- ok.txt");
}

TEST(Fixture, Errors) {
  TempDir dir;
  try {
    load_fixture(dir.path() / "missing");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unreadable_root);
  }
  write_file(dir.path() / "nostatement/repo/a.txt", "x");
  try {
    load_fixture(dir.path() / "nostatement");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::missing_problem_statement);
  }
  write_file(dir.path() / "badtests/problem.md", "# T");
  write_file(dir.path() / "badtests/tests.json", "{not json");
  try {
    load_fixture(dir.path() / "badtests");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
  }
}

TEST(Catalog, ListsAndCaches) {
  FixtureCatalog catalog(data_dir() / "fixtures");
  auto list = catalog.list();
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0].exercise_id, "bubblesort");
  EXPECT_EQ(list[0].title, "Bubble Sort");
  EXPECT_EQ(catalog.get("bubblesort"), catalog.get("bubblesort"));
  EXPECT_THROW(catalog.get("nope"), Error);
  EXPECT_THROW(catalog.get(".."), Error);
}

TEST(Assemble, UnlimitedBudgetKeepsEverything) {
  auto fx = load_fixture(fixture_dir("bubblesort"));
  std::vector<std::string> sel{"src/BubbleSort.java"};
  auto b = assemble_context(fx, sel, true);
  EXPECT_EQ(b.selected_file_contents.at(0).content, fx.repository.files.at("src/BubbleSort.java"));
  EXPECT_FALSE(b.selected_file_contents.at(0).truncated);
  EXPECT_EQ(b.build_log_excerpt, fx.build_log);
  EXPECT_EQ(b.test_feedback_rendered.substr(0, 19), "PASS testEmptyArray");
  EXPECT_EQ(b.total_chars, oracle_total(b));
  auto text = render_bundle(b);
  EXPECT_NE(text.find("### File: src/BubbleSort.java"), std::string::npos);
}

TEST(Assemble, UnknownPathThrows) {
  auto fx = synthetic_fixture(100, 3);
  std::vector<std::string> sel{"src/Nope.java"};
  try {
    assemble_context(fx, sel, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_path);
  }
}

TEST(Assemble, BuildLogTailIsLastHundredLines) {
  auto fx = synthetic_fixture(10, 250);
  auto b = assemble_context(fx, {}, true, 1'000'000);
  ASSERT_TRUE(b.build_log_excerpt);
  EXPECT_TRUE(ends_with_marker(*b.build_log_excerpt));
  EXPECT_EQ(b.build_log_excerpt->rfind("log line 150\n", 0), 0u);
  EXPECT_NE(b.build_log_excerpt->find("log line 249\n[...truncated...]"), std::string::npos);
}

TEST(Assemble, ProblemStatementNeverCut) {
  auto fx = synthetic_fixture(1000, 10);
  fx.problem_statement = std::string(500, 'p');
  auto b = assemble_context(fx, kAllFiles, true, 100);
  EXPECT_EQ(b.problem_statement, fx.problem_statement);
  EXPECT_TRUE(b.selected_file_contents.empty());
  EXPECT_TRUE(b.test_feedback_rendered.empty());
  EXPECT_FALSE(b.build_log_excerpt);
  EXPECT_EQ(b.total_chars, 500u);
}

TEST(Assemble, DropsItemWithoutRoomForMarker) {
  auto fx = synthetic_fixture(1000, 0);
  fx.test_feedback.reset();
  const std::size_t ps = count_code_points(fx.problem_statement);
  const std::size_t marker = std::string("[...truncated...]").size() + 1;
  std::vector<std::string> one{"src/F0.java"};
  EXPECT_TRUE(assemble_context(fx, one, false, ps + marker - 1).selected_file_contents.empty());
  auto b = assemble_context(fx, one, false, ps + marker);
  ASSERT_EQ(b.selected_file_contents.size(), 1u);
  EXPECT_EQ(b.selected_file_contents[0].content, "\n[...truncated...]");
  EXPECT_TRUE(b.selected_file_contents[0].truncated);
}

TEST(Assemble, RandomBudgetsRespectBoundAndOracle) {
  std::mt19937 rng(42);
  auto fx = synthetic_fixture(3000, 180);
  const std::size_t ps = count_code_points(fx.problem_statement);
  for (int i = 0; i < 300; ++i) {
    std::size_t budget = std::uniform_int_distribution<std::size_t>(0, 16000)(rng);
    auto b = assemble_context(fx, kAllFiles, true, budget);
    ASSERT_EQ(b.total_chars, oracle_total(b)) << budget;
    ASSERT_LE(b.total_chars, std::max(budget, ps)) << budget;
    for (const auto& f : b.selected_file_contents) {
      const auto& full = fx.repository.files.at(f.path);
      if (f.truncated) {
        ASSERT_TRUE(ends_with_marker(f.content));
        auto kept = f.content.substr(0, f.content.size() - 18);
        ASSERT_EQ(full.compare(0, kept.size(), kept), 0);
      } else {
        ASSERT_EQ(f.content, full);
      }
    }
    // a truncated or dropped file means nothing after it got room
    for (std::size_t k = 0; k + 1 < b.selected_file_contents.size(); ++k) {
      ASSERT_FALSE(b.selected_file_contents[k].truncated);
    }
  }
}

TEST(Assemble, LargerBudgetNeverLosesContent) {
  auto fx = synthetic_fixture(2000, 150);
  ContextBundle prev = assemble_context(fx, kAllFiles, true, 0);
  for (std::size_t budget = 50; budget <= 12000; budget += 50) {
    auto b = assemble_context(fx, kAllFiles, true, budget);
    ASSERT_GE(b.total_chars, prev.total_chars) << budget;
    ASSERT_GE(b.selected_file_contents.size(), prev.selected_file_contents.size()) << budget;
    ASSERT_GE(b.test_feedback_rendered.size(), prev.test_feedback_rendered.size()) << budget;
    prev = b;
  }
}

TEST(Utf8, CutsOnCodePointBoundaries) {
  std::string s = "a\xc3\xa4\xe2\x82\xac\xf0\x9f\x98\x80z";  // a, a-umlaut, euro, emoji, z
  EXPECT_EQ(utf8_length(s), 5u);
  EXPECT_EQ(utf8_prefix(s, 2), "a\xc3\xa4");
  EXPECT_EQ(utf8_suffix(s, 2), "\xf0\x9f\x98\x80z");
  EXPECT_TRUE(is_valid_utf8(s));
  EXPECT_FALSE(is_valid_utf8("\xc3"));
  EXPECT_FALSE(is_valid_utf8("\xc0\xaf"));
  EXPECT_FALSE(is_valid_utf8("\xed\xa0\x80"));
}

TEST(Paths, Normalization) {
  EXPECT_TRUE(is_normalized_repo_path("src/A.java"));
  EXPECT_FALSE(is_normalized_repo_path("/etc/passwd"));
  EXPECT_FALSE(is_normalized_repo_path("src/../x"));
  EXPECT_FALSE(is_normalized_repo_path("src//x"));
  EXPECT_FALSE(is_normalized_repo_path("src\\x"));
}
