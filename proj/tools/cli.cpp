#include "cli.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "socratic/config.hpp"
#include "socratic/context.hpp"
#include "socratic/error.hpp"
#include "socratic/pipeline.hpp"
#include "socratic/server.hpp"
#include "socratic/service.hpp"
#include "socratic/store.hpp"

namespace fs = std::filesystem;

namespace socratic::cli {
namespace {

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::parse_error, path.string() + ": invalid JSON");
  return doc;
}

Config load_config(const std::string& path) {
  return Config::load(path.empty() ? std::nullopt : std::optional<fs::path>(path));
}

int exit_code_for(const PipelineTrace& trace) {
  if (trace.error) return kExitBackendUnavailable;
  switch (trace.outcome) {
    case Outcome::answered: return kExitOk;
    case Outcome::rejected_off_topic: return kExitRejected;
    case Outcome::fallback: return kExitFallback;
  }
  return kExitFallback;
}

void print_summary(std::ostream& out, const PipelineTrace& trace) {
  out << "outcome: " << to_string(trace.outcome) << '\n';
  out << "relevance_score: "
      << (trace.relevance_score ? std::to_string(*trace.relevance_score) : std::string("none")) << '\n';
  out << "selected_files:";
  for (const auto& f : trace.selected_files) out << ' ' << f;
  out << '\n';
  out << "build_log_requested: " << (trace.build_log_requested ? "true" : "false") << '\n';
  out << "drafts: " << trace.drafts.size() << '\n';
  out << "refinement_count: " << trace.refinement_count << '\n';
  out << "llm_calls: " << trace.llm_calls.size() << '\n';
  for (const auto& w : trace.warnings) out << "warning: " << w << '\n';
  if (trace.error) out << "error: " << *trace.error << '\n';
}

// --- ask ---------------------------------------------------------------------

struct AskOptions {
  std::string fixture;
  std::string question;
  std::string history;
  std::string mock;
  std::string config;
  std::string trace_out;
};

int run_ask(const AskOptions& o, std::ostream& out) {
  auto config = load_config(o.config);
  auto fixture = load_fixture(o.fixture);
  auto templates = prompt_templates_from(config);
  std::unique_ptr<LlmClient> client =
      o.mock.empty() ? make_llm_client(config)
                     : std::make_unique<MockLlmClient>(load_mock_script(o.mock));

  auto session = create_session(fixture.exercise_id, "cli");
  if (!o.history.empty()) {
    auto doc = read_json_file(o.history);
    if (!doc.is_array()) throw Error(ErrorCode::parse_error, o.history + ": expected a JSON array");
    for (const auto& item : doc) {
      try {
        session = append_message(session, item.at("role").get<Role>(),
                                 item.at("content").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse_error, o.history + ": " + e.what());
      }
    }
  }

  TutorPipeline pipeline(*client, pipeline_config_from(config), templates);
  auto turn = pipeline.handle_message(session, fixture, o.question);
  out << turn.reply << "\n\n";
  print_summary(out, turn.trace);
  if (!o.trace_out.empty()) {
    std::ofstream f(o.trace_out, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot write " + o.trace_out);
    f << to_canonical_json(nlohmann::json(turn.trace));
  }
  return exit_code_for(turn.trace);
}

// --- replay ------------------------------------------------------------------

struct ReplayOptions {
  std::string transcript;
  std::string fixture;
  std::string mock;
  std::string config;
  std::string out_dir = "replay-out";
  std::string bless;
};

int run_replay(const ReplayOptions& o, std::ostream& out, std::ostream& err) {
  auto config = load_config(o.config);
  auto fixture = load_fixture(o.fixture);
  auto templates = prompt_templates_from(config);
  auto doc = read_json_file(o.transcript);
  if (!doc.is_array()) throw Error(ErrorCode::parse_error, o.transcript + ": expected a JSON array");

  struct Turn {
    std::string student;
    std::optional<std::string> expected;
  };
  std::vector<Turn> turns;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("student") || !item["student"].is_string()) {
      throw Error(ErrorCode::parse_error, o.transcript + ": every turn needs a \"student\" string");
    }
    Turn t{item["student"].get<std::string>(), std::nullopt};
    if (auto it = item.find("expected_reply"); it != item.end() && it->is_string()) {
      t.expected = it->get<std::string>();
    }
    turns.push_back(std::move(t));
  }

  MockLlmClient client(load_mock_script(o.mock));
  TutorPipeline pipeline(client, pipeline_config_from(config), templates);
  SessionStore store(o.out_dir);

  // Fixed id and clock so repeated replays write byte-identical files.
  const Timestamp epoch{};
  Session session = create_session(fixture.exercise_id, "replay", epoch);
  session.session_id = "replay-" + fixture.exercise_id;
  std::error_code ec;
  fs::remove_all(store.base_dir() / "traces" / session.session_id, ec);

  bool diverged = false;
  nlohmann::json blessed = nlohmann::json::array();
  for (std::size_t i = 0; i < turns.size(); ++i) {
    auto turn = pipeline.handle_message(session, fixture, turns[i].student, epoch);
    session = turn.session;
    store.save_trace(session.session_id, turn.trace);
    blessed.push_back({{"student", turns[i].student}, {"expected_reply", turn.reply}});

    bool ok = !turn.trace.error && (!turns[i].expected || *turns[i].expected == turn.reply);
    out << "turn " << i << ": " << to_string(turn.trace.outcome) << ' '
        << turn.trace.llm_calls.size() << " calls " << (ok ? "ok" : "DIVERGED") << '\n';
    if (!ok) {
      diverged = true;
      if (turn.trace.error) err << "turn " << i << ": backend error: " << *turn.trace.error << '\n';
      if (turns[i].expected && *turns[i].expected != turn.reply) {
        err << "turn " << i << ": expected reply:\n  " << *turns[i].expected << "\ngot:\n  "
            << turn.reply << '\n';
      }
    }
  }
  store.save_session(session);

  if (client.remaining() != 0) {
    diverged = true;
    err << "mock script has " << client.remaining() << " unconsumed entries\n";
  }
  if (!o.bless.empty()) {
    std::ofstream f(o.bless, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot write " + o.bless);
    f << to_canonical_json(blessed);
  }
  out << "traces written to " << (store.base_dir() / "traces" / session.session_id).string() << '\n';
  return diverged ? kExitDivergence : kExitOk;
}

// --- eval-guardrails ---------------------------------------------------------

int run_eval(const std::string& corpus, const std::string& config_path, std::ostream& out) {
  auto config = load_config(config_path);
  auto rules = pipeline_config_from(config).scan_rules;
  std::error_code ec;
  if (!fs::is_directory(corpus, ec)) {
    throw Error(ErrorCode::unreadable_root, "corpus is not a directory: " + corpus);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(corpus)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::map<Violation, std::size_t> counts{{Violation::code_block, 0},
                                          {Violation::pseudocode_or_steps, 0},
                                          {Violation::empty_or_garbled, 0}};
  std::size_t leaks = 0;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    auto verdict = static_scan(buf.str(), rules);
    for (auto v : verdict.violations) ++counts[v];
    if (verdict.violations.count(Violation::code_block) ||
        verdict.violations.count(Violation::pseudocode_or_steps)) {
      ++leaks;
    }
  }
  out << "violation,count\n";
  for (auto v : {Violation::code_block, Violation::pseudocode_or_steps, Violation::empty_or_garbled}) {
    out << to_string(v) << ',' << counts[v] << '\n';
  }
  out << "drafts," << files.size() << '\n';
  double rate = files.empty() ? 0.0 : static_cast<double>(leaks) / static_cast<double>(files.size());
  out << "leak_rate," << std::fixed << std::setprecision(4) << rate << '\n';
  return kExitOk;
}

// --- serve -------------------------------------------------------------------

int run_serve(const std::string& config_path, std::ostream& out) {
  auto config = load_config(config_path);
  auto fixtures_dir = config.get("FIXTURES_DIR");
  if (!fixtures_dir) throw Error(ErrorCode::config_error, "FIXTURES_DIR is not set");
  auto bind = parse_bind_address(config.get_or("BIND_ADDR", "127.0.0.1:8080"));
  auto templates = prompt_templates_from(config);
  auto client = make_llm_client(config);

  FixtureCatalog catalog(*fixtures_dir);
  SessionStore store(config.get_or("STORE_DIR", "socratic-data"));
  TutorService service(catalog, store, *client, pipeline_config_from(config), templates);
  ApiServer server(service, ServerOptions{config.get_or("CORS_ORIGIN", "")});
  int port = server.bind(bind.host, bind.port);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::thread worker([&] { server.serve(); });
  server.wait_until_ready();
  out << "listening on http://" << bind.host << ':' << port << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  out << "shutting down" << std::endl;
  server.stop();
  worker.join();
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-aware programming tutor"};
  app.require_subcommand(1);

  std::string serve_config;
  auto* serve = app.add_subcommand("serve", "Run the HTTP chat API");
  serve->add_option("--config", serve_config, "key=value config file");

  AskOptions ask_opts;
  auto* ask = app.add_subcommand("ask", "Answer one question against a fixture");
  ask->add_option("--fixture", ask_opts.fixture, "Exercise fixture directory")->required();
  ask->add_option("--question", ask_opts.question, "Student question")->required();
  ask->add_option("--history", ask_opts.history, "JSON array of {role, content} earlier messages");
  ask->add_option("--mock", ask_opts.mock, "Mock script; overrides the configured backend");
  ask->add_option("--config", ask_opts.config, "key=value config file");
  ask->add_option("--trace-out", ask_opts.trace_out, "Write the full trace JSON here");

  ReplayOptions replay_opts;
  auto* replay = app.add_subcommand("replay", "Re-run a transcript against a mock script");
  replay->add_option("--transcript", replay_opts.transcript, "JSON array of {student, expected_reply}")->required();
  replay->add_option("--fixture", replay_opts.fixture, "Exercise fixture directory")->required();
  replay->add_option("--mock", replay_opts.mock, "Mock script")->required();
  replay->add_option("--config", replay_opts.config, "key=value config file");
  replay->add_option("--out", replay_opts.out_dir, "Store directory for traces")->capture_default_str();
  replay->add_option("--bless", replay_opts.bless, "Write a transcript with the actual replies here");

  std::string corpus;
  std::string eval_config;
  auto* eval = app.add_subcommand("eval-guardrails", "Static-scan a corpus of .txt drafts");
  eval->add_option("--corpus", corpus, "Directory of .txt drafts")->required();
  eval->add_option("--config", eval_config, "key=value config file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*serve) return run_serve(serve_config, out);
    if (*ask) return run_ask(ask_opts, out);
    if (*replay) return run_replay(replay_opts, out, err);
    if (*eval) return run_eval(corpus, eval_config, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace socratic::cli
