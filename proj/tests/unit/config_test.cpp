#include <gtest/gtest.h>

#include "socratic/config.hpp"
#include "socratic/error.hpp"
#include "test_support.hpp"

using namespace socratic;
using namespace socratic::testing;

TEST(Config, ParsesKeyValueLines) {
  auto c = Config::parse("# comment\nRELEVANCE_THRESHOLD=6\n\nLLM_MODEL = tutor \nCODE_KEYWORDS=for,SELECT\n");
  EXPECT_EQ(c.get_int("RELEVANCE_THRESHOLD", 5), 6);
  EXPECT_EQ(c.get_or("LLM_MODEL", ""), "tutor");
  auto p = pipeline_config_from(c);
  EXPECT_EQ(p.relevance_threshold, 6);
  EXPECT_EQ(p.max_refinements, 3);
  EXPECT_EQ(p.context_budget, 24000u);
  EXPECT_EQ(p.scan_rules.code_keywords, (std::vector<std::string>{"for", "SELECT"}));
}

TEST(Config, RejectsUnknownKeysAndBadInts) {
  EXPECT_THROW(Config::parse("LLM_MODLE=x"), Error);
  EXPECT_THROW(Config::parse("no equals sign"), Error);
  EXPECT_THROW(Config::parse("MAX_REFINEMENTS=lots").get_int("MAX_REFINEMENTS", 3), Error);
}

TEST(Config, FileOverridesEnvironment) {
  TempDir dir;
  write_file(dir.path() / "c.conf", "LLM_MODEL=from-file\n");
  ::setenv("LLM_MODEL", "from-env", 1);
  ::setenv("LLM_ENDPOINT", "http://env/v1/chat/completions", 1);
  auto c = Config::load(dir.path() / "c.conf");
  ::unsetenv("LLM_MODEL");
  ::unsetenv("LLM_ENDPOINT");
  EXPECT_EQ(c.get_or("LLM_MODEL", ""), "from-file");
  EXPECT_EQ(c.get_or("LLM_ENDPOINT", ""), "http://env/v1/chat/completions");
}

TEST(Config, BackendSelection) {
  auto mock = Config::parse("LLM_BACKEND=mock\nMOCK_SCRIPT_PATH=" +
                            (data_dir() / "golden/happy.script.json").string());
  EXPECT_NE(dynamic_cast<MockLlmClient*>(make_llm_client(mock).get()), nullptr);
  EXPECT_THROW(make_llm_client(Config::parse("LLM_BACKEND=mock")), Error);
  EXPECT_THROW(make_llm_client(Config::parse("LLM_BACKEND=carrier-pigeon")), Error);
  EXPECT_THROW(make_llm_client(Config{}), Error);
}

TEST(Config, BindAddress) {
  auto a = parse_bind_address("0.0.0.0:9000");
  EXPECT_EQ(a.host, "0.0.0.0");
  EXPECT_EQ(a.port, 9000);
  EXPECT_THROW(parse_bind_address("localhost"), Error);
  EXPECT_THROW(parse_bind_address("h:99999"), Error);
}
