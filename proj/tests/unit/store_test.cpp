#include <gtest/gtest.h>

#include "socratic/error.hpp"
#include "socratic/store.hpp"
#include "test_support.hpp"

using namespace socratic;
using namespace socratic::testing;

namespace {

Session sample_session(const std::string& student = "s1") {
  auto s = create_session("bubblesort", student, fixed_time());
  s = append_message(s, Role::student, "How do I start?", fixed_time(10));
  return append_message(s, Role::tutor, "What does the problem ask for first?", fixed_time(20));
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::io_error;
}

}  // namespace

TEST(Store, SessionRoundTrip) {
  TempDir dir;
  SessionStore store(dir.path());
  auto s = sample_session();
  store.save_session(s);
  EXPECT_EQ(store.load_session(s.session_id), s);
  EXPECT_TRUE(store.has_session(s.session_id));
  EXPECT_EQ(store.session_path(s.session_id), dir.path() / "sessions" / (s.session_id + ".json"));
  EXPECT_EQ(read_file(store.session_path(s.session_id)), to_canonical_json(nlohmann::json(s)));
}

TEST(Store, TraceRoundTrip) {
  TempDir dir;
  SessionStore store(dir.path());
  PipelineTrace t;
  t.message_sequence = 2;
  t.relevance_score = 3;
  t.gated = true;
  t.outcome = Outcome::rejected_off_topic;
  store.save_trace("abc", t);
  EXPECT_EQ(store.load_trace("abc", 2), t);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "traces/abc/2.json"));
  EXPECT_EQ(code_of([&] { store.load_trace("abc", 3); }), ErrorCode::not_found);
}

TEST(Store, UnknownIdIsNotFound) {
  TempDir dir;
  SessionStore store(dir.path());
  EXPECT_EQ(code_of([&] { store.load_session("nope"); }), ErrorCode::not_found);
  EXPECT_EQ(code_of([&] { store.load_session("../etc"); }), ErrorCode::not_found);
}

TEST(Store, TruncatedFileIsCorruptAndNamed) {
  TempDir dir;
  SessionStore store(dir.path());
  auto s = sample_session();
  store.save_session(s);
  auto path = store.session_path(s.session_id);
  std::filesystem::resize_file(path, 10);
  try {
    store.load_session(s.session_id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::corrupt_record);
    EXPECT_NE(std::string(e.what()).find(path.string()), std::string::npos);
  }
}

TEST(Store, CrashBeforeRenameKeepsOldRecord) {
  TempDir dir;
  SessionStore store(dir.path());
  auto s = sample_session();
  store.save_session(s);
  auto updated = append_message(s, Role::student, "And then?", fixed_time(30));

  std::filesystem::path seen_temp;
  store.set_commit_hook([&](const std::filesystem::path& temp, const std::filesystem::path&) {
    seen_temp = temp;
    // the temp file is complete before the rename point
    EXPECT_EQ(read_file(temp), to_canonical_json(nlohmann::json(updated)));
    throw std::runtime_error("simulated crash");
  });
  EXPECT_THROW(store.save_session(updated), std::runtime_error);
  EXPECT_EQ(store.load_session(s.session_id), s);

  store.set_commit_hook({});
  store.save_session(updated);
  EXPECT_EQ(store.load_session(s.session_id), updated);
}

TEST(Store, ListFiltersByStudentAndSkipsCorrupt) {
  TempDir dir;
  SessionStore store(dir.path());
  auto a = sample_session("alice");
  auto b = sample_session("bob");
  store.save_session(a);
  store.save_session(b);
  write_file(dir.path() / "sessions/broken.json", "{");
  EXPECT_EQ(store.list_sessions().size(), 2u);
  auto only = store.list_sessions(std::string("bob"));
  ASSERT_EQ(only.size(), 1u);
  EXPECT_EQ(only[0].session_id, b.session_id);
  EXPECT_EQ(only[0].message_count, 2u);
}
