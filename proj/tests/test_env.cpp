#include "doctest.h"
#include "support/fixtures.hpp"
#include <filesystem>

#include "uprop/env.hpp"
#include "uprop/io_util.hpp"

using namespace uprop;
using namespace uprop::env;
using testsupport::make_decision;
using testsupport::make_step;

namespace {

WikiCorpusEnv::Corpus demo_corpus() {
  return {
      {"High Plains",
       {"The High Plains are a subregion of the Great Plains. From east to "
        "west, the High Plains rise in elevation from around 1,800 to 7,000 "
        "ft (550 to 2,130 m).",
        "The Southern High Plains are a subregion. Water is scarce on the "
        "High Plains."}},
      {"Colorado orogeny",
       {"The Colorado orogeny was an episode of mountain building (an "
        "orogeny) in Colorado and surrounding areas. The eastern sector "
        "extends into the High Plains."}},
      {"Great Plains", {"The Great Plains are a broad expanse of flatland."}},
  };
}

}  // namespace

TEST_SUITE("environments") {

TEST_CASE("answer action parses from an OS-style turn") {
  ParsedAction a = parse_action("Think: done.\nAct: answer(220)");
  CHECK(a.kind == ActionKind::kAnswer);
  CHECK(a.payload == "220");
  CHECK(a.canonical() == "answer(220)");
}

TEST_CASE("bracketed search parses from a ReAct turn") {
  ParsedAction a = parse_action("Action 3: Search[High Plains]");
  CHECK(a.kind == ActionKind::kSearch);
  CHECK(a.payload == "High Plains");
  CHECK(a.canonical() == "Search[High Plains]");
}

TEST_CASE("lookup, bracketed finish, and bare forms parse") {
  CHECK(parse_action("Action 2: Lookup[eastern sector]").kind ==
        ActionKind::kLookup);
  ParsedAction f = parse_action("Action 5: Finish[1,800 to 7,000 ft]");
  CHECK(f.kind == ActionKind::kFinish);
  CHECK(f.payload == "1,800 to 7,000 ft");
  CHECK(parse_action("Search[x]").kind == ActionKind::kSearch);
}

TEST_CASE("keywords are case-insensitive") {
  CHECK(parse_action("ACT: ANSWER(42)").kind == ActionKind::kAnswer);
  CHECK(parse_action("action 1: search[abc]").kind == ActionKind::kSearch);
  CHECK(parse_action("Think.\n\nact: finish").kind == ActionKind::kFinish);
}

TEST_CASE("bash action captures the fenced block") {
  ParsedAction a = parse_action(
      "Think: count them.\n\nAct: bash\n\n```bash\nls -1 /etc | wc -l\n```");
  CHECK(a.kind == ActionKind::kBash);
  CHECK(a.payload == "ls -1 /etc | wc -l");
}

TEST_CASE("bash without a fence is malformed") {
  ParsedAction a = parse_action("Act: bash\nls /etc");
  CHECK(a.kind == ActionKind::kMalformed);
  CHECK(a.payload == "Act: bash\nls /etc");
}

TEST_CASE("free text is malformed and keeps the raw payload") {
  ParsedAction a = parse_action("I am not sure.");
  CHECK(a.kind == ActionKind::kMalformed);
  CHECK(a.payload == "I am not sure.");
}

TEST_CASE("word boundaries avoid false keyword hits") {
  // "exact:" must not read as "act:"; "research[" must not read as "search[".
  CHECK(parse_action("exact: nothing here").kind == ActionKind::kMalformed);
  CHECK(parse_action("research[topic]").kind == ActionKind::kMalformed);
}

TEST_CASE("oracle env encodes history and honors the horizon") {
  OracleEnv env(2);
  EnvResponse r = env.reset("t1");
  CHECK(r.observation == "step=1");
  CHECK(!r.terminated);
  r = env.step(parse_action("a"));
  CHECK(r.observation == "step=2 history=a");
  CHECK(!r.terminated);
  r = env.step(parse_action("b"));
  CHECK(r.terminated);
  CHECK(r.final_answer == "b");
}

TEST_CASE("answer terminates any environment") {
  OracleEnv env(5);
  env.reset("t");
  EnvResponse r = env.step(parse_action("Act: answer(220)"));
  CHECK(r.terminated);
  CHECK(r.final_answer == "220");
}

TEST_CASE("environment transitions are deterministic") {
  for (int round = 0; round < 2; ++round) {
    OracleEnv env(3);
    env.reset("t");
    CHECK(env.step(parse_action("a")).observation == "step=2 history=a");
    CHECK(env.step(parse_action("b")).observation == "step=3 history=a|b");
  }
}

TEST_CASE("wiki search hit returns the first paragraph") {
  WikiCorpusEnv env(demo_corpus());
  env.reset("q1");
  EnvResponse r = env.step(parse_action("Action 1: Search[High Plains]"));
  CHECK(!r.terminated);
  CHECK(r.observation.find("The High Plains are a subregion") == 0);
}

TEST_CASE("wiki search miss lists the five closest titles") {
  WikiCorpusEnv env(demo_corpus());
  env.reset("q1");
  EnvResponse r = env.step(parse_action("Search[High Plain]"));
  CHECK(r.observation.find("Similar:") != std::string::npos);
  CHECK(r.observation.find("High Plains") != std::string::npos);
}

TEST_CASE("wiki lookup advances through matches and then runs out") {
  WikiCorpusEnv env(demo_corpus());
  env.reset("q1");
  env.step(parse_action("Search[High Plains]"));
  EnvResponse r1 = env.step(parse_action("Lookup[High Plains]"));
  CHECK(r1.observation.find("(Result 1 / ") == 0);
  EnvResponse r2 = env.step(parse_action("Lookup[High Plains]"));
  CHECK(r2.observation.find("(Result 2 / ") == 0);
  // Exhaust the remaining matches, then expect the sentinel.
  EnvResponse r = env.step(parse_action("Lookup[High Plains]"));
  while (r.observation != "No more results.") {
    r = env.step(parse_action("Lookup[High Plains]"));
  }
  CHECK(r.observation == "No more results.");
}

TEST_CASE("wiki finish terminates with the payload") {
  WikiCorpusEnv env(demo_corpus());
  env.reset("q1");
  EnvResponse r = env.step(parse_action("Finish[1,800 to 7,000 ft]"));
  CHECK(r.terminated);
  CHECK(r.final_answer == "1,800 to 7,000 ft");
}

TEST_CASE("malformed actions do not terminate") {
  WikiCorpusEnv env(demo_corpus());
  env.reset("q1");
  EnvResponse r = env.step(parse_action("I am not sure."));
  CHECK(!r.terminated);
  CHECK(r.observation == "Invalid action format.");
}

TEST_CASE("observation truncation appends a marker on a utf-8 boundary") {
  std::string obs(3000, 'x');
  std::string clipped = truncate_observation(obs, 2048);
  CHECK(clipped.size() == 2048 + 11);
  CHECK(clipped.substr(clipped.size() - 11) == "[truncated]");
  CHECK(truncate_observation("short", 2048) == "short");
  // A two-byte scalar straddling the cut is dropped whole.
  std::string accents;
  for (int i = 0; i < 20; ++i) accents += "\xc3\xa9";
  std::string cut = truncate_observation(accents, 5);
  CHECK(cut == "\xc3\xa9\xc3\xa9[truncated]");
}

TEST_CASE("stdio adapter round-trips and terminates on answer") {
  StdioAdapterEnv env({STDIO_CHILD_PATH});
  EnvResponse r = env.reset("task-1");
  CHECK(r.observation == "ready:task-1");
  r = env.step(parse_action("Search[abc]"));
  CHECK(r.observation == "echo:search:abc");
  r = env.step(parse_action("Act: answer(220)"));
  CHECK(r.terminated);
  CHECK(r.final_answer == "220");
}

TEST_CASE("stdio adapter surfaces a dead child as an adapter error") {
  StdioAdapterEnv env({STDIO_CHILD_PATH});
  env.reset("task-1");
  CHECK_THROWS_AS(env.step(parse_action("Search[die]")), AdapterError);
  // Writing to the dead child must also fail cleanly, not raise SIGPIPE.
  CHECK_THROWS_AS(env.step(parse_action("Search[after]")), AdapterError);
}

TEST_CASE("stdio adapter rejects malformed child output") {
  StdioAdapterEnv env({STDIO_CHILD_PATH});
  env.reset("task-1");
  CHECK_THROWS_WITH_AS(env.step(parse_action("Search[garbage]")),
                       doctest::Contains("malformed"), AdapterError);
}

TEST_CASE("replay env replays observations and flags divergence") {
  TdpRecord recording;
  recording.steps.push_back(
      make_step({make_decision("Search[High Plains]", -0.5)}, 0, "first obs"));
  recording.steps.push_back(
      make_step({make_decision("answer(220)", -0.5)}, 0, "second obs"));
  recording.terminated = true;
  recording.final_answer = "220";

  ReplayEnv env(recording);
  env.reset("t");
  EnvResponse r = env.step(parse_action("Action 1: Search[High Plains]"));
  CHECK(r.observation == "first obs");
  CHECK(!r.terminated);
  r = env.step(parse_action("Act: answer(220)"));
  CHECK(r.observation == "second obs");
  CHECK(r.terminated);
  CHECK(r.final_answer == "220");

  ReplayEnv env2(recording);
  env2.reset("t");
  CHECK_THROWS_WITH_AS(env2.step(parse_action("Search[Wrong Entity]")),
                       doctest::Contains("step 1"), ReplayError);
}

TEST_CASE("environment factory builds each kind") {
  auto oracle_env = make_environment(R"({"kind":"oracle","horizon":2})");
  CHECK(oracle_env->reset("t").observation == "step=1");

  auto dir = std::filesystem::temp_directory_path() / "uprop_env_factory";
  std::filesystem::create_directories(dir);
  std::string corpus_path = (dir / "corpus.json").string();
  uprop::write_file_atomic(corpus_path,
                           R"({"High Plains":["The High Plains rise."]})");
  auto wiki = make_environment(R"({"kind":"wiki","corpus":")" + corpus_path +
                               R"("})");
  wiki->reset("t");
  CHECK(wiki->step(parse_action("Search[High Plains]")).observation ==
        "The High Plains rise.");

  auto adapter = make_environment(
      std::string(R"({"kind":"stdio","command":[")") + STDIO_CHILD_PATH +
      R"("]})");
  CHECK(adapter->reset("t7").observation == "ready:t7");

  CHECK_THROWS_AS(make_environment(R"({"kind":"marswalk"})"), InputError);
}

}  // TEST_SUITE
