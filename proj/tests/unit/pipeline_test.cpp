#include <gtest/gtest.h>

#include <random>
#include <regex>

#include "socratic/error.hpp"
#include "socratic/pipeline.hpp"
#include "test_support.hpp"

using namespace socratic;
using namespace socratic::testing;

namespace {

// Oracle: scan integer tokens left to right, take the first one in 1..10.
std::optional<int> oracle_relevance(const std::string& text) {
  static const std::regex digits("[0-9]+");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), digits); it != std::sregex_iterator(); ++it) {
    const auto tok = it->str();
    if (tok.size() <= 2) {
      int v = std::stoi(tok);
      if (v >= 1 && v <= 10) return v;
    }
  }
  return std::nullopt;
}

Message student(std::string text) { return {Role::student, std::move(text), fixed_time(), 0}; }

ExerciseFixture bubblesort() { return load_fixture(fixture_dir("bubblesort")); }

}  // namespace

TEST(Relevance, ParseExamples) {
  EXPECT_EQ(parse_relevance("8"), 8);
  EXPECT_EQ(parse_relevance("Relevance: 7/10 because it is about loops"), 7);
  EXPECT_EQ(parse_relevance("Score 0, no wait, 10"), 10);
  EXPECT_EQ(parse_relevance("maybe"), std::nullopt);
  EXPECT_EQ(parse_relevance("100"), std::nullopt);
}

TEST(Relevance, ParseAgreesWithTokenOracle) {
  std::mt19937 rng(7);
  const std::vector<std::string> words{"score", ":", " ", "/", "10", "0", "11", "3", "x", "\n", "-", "7.5", "123"};
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    int n = std::uniform_int_distribution<int>(0, 6)(rng);
    for (int k = 0; k < n; ++k) s += words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
    ASSERT_EQ(parse_relevance(s), oracle_relevance(s)) << "'" << s << "'";
  }
}

TEST(Relevance, RetryThenFailOpen) {
  std::vector<std::string> replies{"maybe", "unclear"};
  FnClient client([&](const ChatPrompt& p) {
    EXPECT_EQ(p.step_tag, StepTag::relevance);
    return replies.at(static_cast<std::size_t>(client.calls - 1));
  });
  auto score = assess_relevance(client, {}, student("How do loops work?"), "Bubble Sort");
  EXPECT_EQ(client.calls, 2);
  EXPECT_EQ(score.value, 5);
  EXPECT_TRUE(score.fell_back);
  EXPECT_EQ(gate(score), GateDecision::proceed);
}

TEST(Relevance, RetrySucceeds) {
  FnClient client([&](const ChatPrompt& p) {
    if (client.calls == 2) {
      EXPECT_NE(render_prompt_text(p).find("single integer"), std::string::npos);
      return std::string("2");
    }
    return std::string("no idea");
  });
  auto score = assess_relevance(client, {}, student("weather?"), "Bubble Sort");
  EXPECT_EQ(score.value, 2);
  EXPECT_FALSE(score.fell_back);
}

TEST(Relevance, PromptCarriesTitleAndQuestion) {
  auto p = build_relevance_prompt({}, student("Why is my loop off by one?"), "Bubble Sort");
  auto text = render_prompt_text(p);
  EXPECT_NE(text.find("Bubble Sort"), std::string::npos);
  EXPECT_NE(text.find("Why is my loop off by one?"), std::string::npos);
}

TEST(Gate, Boundaries) {
  EXPECT_EQ(gate({4}), GateDecision::reject);
  EXPECT_EQ(gate({5}), GateDecision::proceed);
  EXPECT_EQ(gate({10}), GateDecision::proceed);
  EXPECT_EQ(gate({1}), GateDecision::reject);
}

TEST(FileSelection, Examples) {
  RepositorySnapshot snap;
  snap.files = {{"src/Main.java", "x"}, {"src/Util.java", "y"}};
  auto a = parse_file_selection("src/Main.java\nBUILD_LOG", snap, true);
  EXPECT_EQ(a.accepted, std::vector<std::string>{"src/Main.java"});
  EXPECT_TRUE(a.include_build_log);
  auto b = parse_file_selection("src/Ghost.java", snap, true);
  EXPECT_TRUE(b.accepted.empty());
  EXPECT_EQ(b.dropped, std::vector<std::string>{"src/Ghost.java"});
  auto c = parse_file_selection("- src/Util.java\nBUILD_LOG", snap, false);
  EXPECT_EQ(c.accepted, std::vector<std::string>{"src/Util.java"});
  EXPECT_FALSE(c.include_build_log);
}

TEST(FileSelection, TakesFirstFiveInEmissionOrder) {
  RepositorySnapshot snap;
  std::vector<std::string> emitted;
  for (int i = 7; i >= 1; --i) {
    auto p = "f" + std::to_string(i) + ".txt";
    snap.files[p] = "c";
    emitted.push_back(p);
  }
  std::string completion;
  for (const auto& e : emitted) completion += e + "\n";
  auto sel = parse_file_selection(completion, snap, false);
  std::vector<std::string> expected(emitted.begin(), emitted.begin() + 5);
  EXPECT_EQ(sel.accepted, expected);
}

TEST(Generation, DraftIsVerbatim) {
  auto fx = bubblesort();
  auto bundle = assemble_context(fx, {}, false);
  for (std::string reply : {std::string("Have you considered what happens when the list is empty?"),
                            std::string("```java\nint x;\n```"), std::string()}) {
    FnClient client([&](const ChatPrompt& p) {
      EXPECT_EQ(p.step_tag, StepTag::generation);
      return reply;
    });
    EXPECT_EQ(generate_response(client, bundle, {}, student("hint?"), AssistanceLevel::L3), reply);
  }
}

TEST(HandleMessage, RejectionUsesOneCall) {
  MockLlmClient mock(load_mock_script(data_dir() / "golden/rejection.script.json"));
  TutorPipeline pipeline(mock, {});
  auto fx = bubblesort();
  auto s = create_session("bubblesort", "s1", fixed_time());
  auto r = pipeline.handle_message(s, fx, "What is the weather like in Munich today?", fixed_time());
  EXPECT_EQ(r.reply, kOffTopicReply);
  EXPECT_EQ(r.trace.outcome, Outcome::rejected_off_topic);
  EXPECT_TRUE(r.trace.gated);
  EXPECT_EQ(r.trace.llm_calls.size(), 1u);
  EXPECT_EQ(mock.consumed(), 1u);
  ASSERT_EQ(r.session.messages.size(), 2u);
  EXPECT_EQ(r.session.messages[1].content, kOffTopicReply);
  EXPECT_TRUE(check_trace_invariants(r.trace, 3).empty());
}

TEST(HandleMessage, HappyPathUsesFourCalls) {
  MockLlmClient mock(load_mock_script(data_dir() / "golden/happy.script.json"));
  TutorPipeline pipeline(mock, {});
  auto s = create_session("bubblesort", "s1", fixed_time());
  auto r = pipeline.handle_message(s, bubblesort(),
                                   "Why does my sort crash with an ArrayIndexOutOfBoundsException?",
                                   fixed_time());
  EXPECT_EQ(r.trace.outcome, Outcome::answered);
  EXPECT_EQ(r.trace.llm_calls.size(), 4u);
  EXPECT_EQ(mock.remaining(), 0u);
  EXPECT_EQ(r.trace.selected_files, std::vector<std::string>{"src/BubbleSort.java"});
  EXPECT_TRUE(r.trace.build_log_requested);
  EXPECT_EQ(r.trace.relevance_score, 7);
  EXPECT_EQ(r.trace.message_sequence, 0u);
  EXPECT_TRUE(check_trace_invariants(r.trace, 3).empty());
}

TEST(HandleMessage, AllDraftsFailGivesFallback) {
  // garbled first relevance reply forces the retry, so this is the worst case
  FnClient client([&](const ChatPrompt& p) -> std::string {
    switch (p.step_tag) {
      case StepTag::relevance: return client.per_step[0] == 1 ? "hmm" : "9";
      case StepTag::file_selection: return "src/BubbleSort.java";
      case StepTag::generation: return "A perfectly polite hint.";
      case StepTag::self_check: return "FAIL";
    }
    return {};
  });
  TutorPipeline pipeline(client, {});
  auto r = pipeline.handle_message(create_session("bubblesort", "s"), bubblesort(), "help me");
  EXPECT_EQ(r.trace.outcome, Outcome::fallback);
  EXPECT_EQ(r.reply, kFallbackReply);
  EXPECT_EQ(client.calls, max_llm_calls(pipeline.config()));
  EXPECT_EQ(client.calls, 11);
  EXPECT_EQ(r.trace.refinement_count, 3);
  EXPECT_TRUE(check_trace_invariants(r.trace, 3).empty());
}

TEST(HandleMessage, BackendFailureYieldsUnavailableReply) {
  MockLlmClient mock(MockScript{});
  TutorPipeline pipeline(mock, {});
  auto r = pipeline.handle_message(create_session("bubblesort", "s"), bubblesort(), "help me");
  EXPECT_EQ(r.reply, kUnavailableReply);
  EXPECT_TRUE(r.trace.error.has_value());
  EXPECT_EQ(r.trace.outcome, Outcome::fallback);
}

TEST(HandleMessage, InputErrorsBeforeAnyCall) {
  FnClient client([](const ChatPrompt&) { return std::string("9"); });
  TutorPipeline pipeline(client, {});
  EXPECT_THROW(pipeline.handle_message(create_session("bubblesort", "s"), bubblesort(), "   "), Error);
  EXPECT_EQ(client.calls, 0);
}

TEST(HandleMessage, HistoryReachesGeneration) {
  FnClient client([&](const ChatPrompt& p) -> std::string {
    if (p.step_tag == StepTag::generation) {
      EXPECT_NE(render_prompt_text(p).find("my earlier question"), std::string::npos);
    }
    switch (p.step_tag) {
      case StepTag::relevance: return "8";
      case StepTag::file_selection: return "";
      case StepTag::generation: return "What does the loop bound compare against?";
      default: return "PASS";
    }
  });
  TutorPipeline pipeline(client, {});
  auto s = create_session("bubblesort", "s");
  s = append_message(s, Role::student, "my earlier question");
  s = append_message(s, Role::tutor, "an earlier answer");
  auto r = pipeline.handle_message(s, bubblesort(), "and now?");
  EXPECT_EQ(r.trace.message_sequence, 2u);
  EXPECT_EQ(r.trace.outcome, Outcome::answered);
  EXPECT_TRUE(r.trace.selected_files.empty());
}
