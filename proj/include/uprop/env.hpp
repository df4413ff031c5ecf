#pragma once

// Pluggable decision environments. The contract mirrors a deterministic
// observation-transition function: identical decision sequences from reset
// produce identical observation sequences.
//
//   OracleEnv        records decisions verbatim; observations encode the
//                    history; terminates at a fixed horizon
//   WikiCorpusEnv    Search/Lookup/Finish over a local title -> paragraphs
//                    corpus
//   StdioAdapterEnv  line-delimited JSON bridge to an external process
//   ReplayEnv        replays a recorded TDP, erroring on divergence

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "uprop/model.hpp"

namespace uprop::env {

struct EnvResponse {
  std::string observation;
  bool terminated = false;
  std::optional<std::string> final_answer;  // present => terminated
};

enum class ActionKind {
  kSearch,
  kLookup,
  kFinish,
  kBash,
  kAnswer,
  kMalformed,
};

struct ParsedAction {
  ActionKind kind = ActionKind::kMalformed;
  std::string payload;  // raw text when malformed

  // Canonical surface form used for action distances and replay matching.
  std::string canonical() const;
};

// Recognizes, case-insensitively on keywords: "Act: bash" + fenced code
// block, "Act: answer(...)", "Act: finish", and bracketed
// Search[...] / Lookup[...] / Finish[...] forms. Anything else is
// kMalformed with the raw text as payload.
ParsedAction parse_action(const std::string& full_text);

const char* action_kind_name(ActionKind kind);

// Clips an observation to a byte budget, appending "[truncated]". Applied
// prompt-side by the orchestrator; persisted records keep the full text.
std::string truncate_observation(const std::string& obs, std::size_t budget);

class Environment {
public:
  virtual ~Environment() = default;
  virtual EnvResponse reset(const std::string& task_id) = 0;
  virtual EnvResponse step(const ParsedAction& action) = 0;
};

// Records every decision verbatim (the action payload; alphabet strings are
// opaque). Terminates at the horizon, or early on Finish/Answer.
class OracleEnv : public Environment {
public:
  explicit OracleEnv(int horizon);
  EnvResponse reset(const std::string& task_id) override;
  EnvResponse step(const ParsedAction& action) override;

private:
  int horizon_;
  std::vector<std::string> history_;
};

class WikiCorpusEnv : public Environment {
public:
  using Corpus = std::map<std::string, std::vector<std::string>>;

  explicit WikiCorpusEnv(Corpus corpus);
  static WikiCorpusEnv from_file(const std::string& path);

  EnvResponse reset(const std::string& task_id) override;
  EnvResponse step(const ParsedAction& action) override;

private:
  EnvResponse do_search(const std::string& entity);
  EnvResponse do_lookup(const std::string& keyword);

  Corpus corpus_;
  std::vector<std::string> sentences_;  // current passage, sentence-split
  std::string lookup_keyword_;
  std::size_t lookup_cursor_ = 0;
};

// Bridges to an external process speaking one JSON object per line:
// requests {"action":..., "payload":...} or {"reset": task_id}, responses
// {"observation":..., "terminated":..., "final_answer":...}.
class StdioAdapterEnv : public Environment {
public:
  explicit StdioAdapterEnv(std::vector<std::string> argv);
  ~StdioAdapterEnv() override;

  StdioAdapterEnv(const StdioAdapterEnv&) = delete;
  StdioAdapterEnv& operator=(const StdioAdapterEnv&) = delete;

  EnvResponse reset(const std::string& task_id) override;
  EnvResponse step(const ParsedAction& action) override;

private:
  EnvResponse roundtrip(const std::string& request_line);
  void spawn();
  void shutdown();

  std::vector<std::string> argv_;
  int child_pid_ = -1;
  int to_child_ = -1;
  FILE* from_child_ = nullptr;
};

class ReplayEnv : public Environment {
public:
  explicit ReplayEnv(TdpRecord recording);
  EnvResponse reset(const std::string& task_id) override;
  EnvResponse step(const ParsedAction& action) override;

private:
  TdpRecord recording_;
  std::size_t cursor_ = 0;
};

// Builds an environment from a plan's {"kind": ..., ...} params. Supported
// kinds: "oracle" (horizon or table), "wiki" (corpus path), "stdio" (argv).
std::unique_ptr<Environment> make_environment(const std::string& params_json);

}  // namespace uprop::env
