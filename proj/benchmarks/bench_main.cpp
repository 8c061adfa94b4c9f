#include <benchmark/benchmark.h>

#include "socratic/pipeline.hpp"

using namespace socratic;

namespace {

const ExerciseFixture& fixture() {
  static const ExerciseFixture fx = load_fixture(SOCRATIC_BENCH_FIXTURE);
  return fx;
}

// Answers each step with a fixed completion; no script to run out of.
class CannedClient final : public LlmClient {
 public:
  LlmExchange complete(const ChatPrompt& p) override {
    switch (p.step_tag) {
      case StepTag::relevance: return {p, "8", 0, Backend::mock};
      case StepTag::file_selection: return {p, "src/BubbleSort.java\nBUILD_LOG", 0, Backend::mock};
      case StepTag::generation: return {p, "Which index does the inner loop reach last?", 0, Backend::mock};
      case StepTag::self_check: return {p, "PASS", 0, Backend::mock};
    }
    return {p, "", 0, Backend::mock};
  }
};

void BM_StaticScan(benchmark::State& state) {
  std::string draft;
  for (int i = 0; i < state.range(0); ++i) {
    draft += i % 5 == 0 ? "for (int i = 0; i < n; i++) {\n" : "Think about the loop bound here.\n";
  }
  for (auto _ : state) benchmark::DoNotOptimize(static_scan(draft));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(draft.size()));
}
BENCHMARK(BM_StaticScan)->Range(8, 4096);

void BM_AssembleContext(benchmark::State& state) {
  ExerciseFixture fx = fixture();
  std::string big;
  while (big.size() < 200'000) big += "    int value = compute(index); // \xe2\x9c\x93\n";
  fx.repository.files["src/Big.java"] = big;
  std::vector<std::string> sel{"src/BubbleSort.java", "src/Big.java", "src/Main.java"};
  const auto budget = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_context(fx, sel, true, budget));
}
BENCHMARK(BM_AssembleContext)->Arg(2000)->Arg(24000)->Arg(200000);

void BM_HandleMessage(benchmark::State& state) {
  CannedClient client;
  TutorPipeline pipeline(client, {});
  auto session = create_session("bubblesort", "bench");
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipeline.handle_message(session, fixture(), "Why does my sort crash?"));
  }
}
BENCHMARK(BM_HandleMessage);

}  // namespace

BENCHMARK_MAIN();
