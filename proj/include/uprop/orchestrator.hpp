#pragma once

// Runs the TDP sampling protocol: at every step draw N decisions from the
// backend, choose one realization, step the environment, and record
// everything. A task run is one greedy rollout (graded for correctness)
// plus Z independent TDPs.
//
// All randomness flows from per-task, per-TDP derived streams, so runs are
// reproducible at any concurrency for the oracle backend and at
// concurrency 1 in general.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "uprop/client.hpp"
#include "uprop/env.hpp"
#include "uprop/model.hpp"
#include "uprop/oracle.hpp"
#include "uprop/rng.hpp"

namespace uprop::orchestrator {

enum class MatchMode { kExact, kFuzzy, kContains };

struct AnswerMatcher {
  MatchMode mode = MatchMode::kExact;
  double threshold = 0.3;  // fuzzy only, in [0, 1]
};

bool grade_answer(const std::string& pred, const std::string& gold,
                  const AnswerMatcher& matcher);

enum class SelectionMode {
  kUniform,   // uniform over the N drawn samples (default)
  kWeighted,  // probability-proportional over the N drawn samples
};

// Draws the N per-step decisions and the greedy decision. Implementations:
// the exact-table oracle and the chat-completions client.
class SamplerBackend {
public:
  virtual ~SamplerBackend() = default;
  virtual std::vector<Decision> sample(
      const std::vector<client::ChatMessage>& messages,
      const std::vector<std::string>& action_history, int n,
      const GenConfig& gen, Rng& rng) = 0;
  virtual Decision greedy(const std::vector<client::ChatMessage>& messages,
                          const std::vector<std::string>& action_history,
                          const GenConfig& gen) = 0;
};

class OracleTableBackend : public SamplerBackend {
public:
  explicit OracleTableBackend(oracle::ProcessTable table);
  std::vector<Decision> sample(const std::vector<client::ChatMessage>&,
                               const std::vector<std::string>& action_history,
                               int n, const GenConfig&, Rng& rng) override;
  Decision greedy(const std::vector<client::ChatMessage>&,
                  const std::vector<std::string>& action_history,
                  const GenConfig&) override;

private:
  const std::vector<double>& conditional(
      const std::vector<std::string>& action_history) const;
  Decision make_decision(int step, std::size_t index,
                         const std::vector<double>& cond) const;

  oracle::ProcessTable table_;
};

class LlmBackend : public SamplerBackend {
public:
  explicit LlmBackend(client::ClientConfig cfg);
  std::vector<Decision> sample(const std::vector<client::ChatMessage>& messages,
                               const std::vector<std::string>&, int n,
                               const GenConfig& gen, Rng&) override;
  Decision greedy(const std::vector<client::ChatMessage>& messages,
                  const std::vector<std::string>&,
                  const GenConfig& gen) override;

private:
  client::LlmClient client_;
};

// Named prompt templates: "os" (terminal-agent turn format) and "react"
// (Thought/Action/Observation format with few-shot demonstrations).
class PromptBuilder {
public:
  explicit PromptBuilder(std::string template_id,
                         std::size_t observation_budget = 2048);

  std::vector<client::ChatMessage> initial(const std::string& instruction,
                                           const std::string& first_obs) const;
  void append_turn(std::vector<client::ChatMessage>& messages,
                   const std::string& generation,
                   const std::string& observation, int step_index) const;

private:
  std::string template_id_;
  std::size_t observation_budget_;
};

struct TaskSpec {
  std::string task_id;
  std::string instruction;
  std::optional<std::string> gold;
};

struct RunPlan {
  std::vector<TaskSpec> tasks;
  std::string env_params_json;  // consumed by env::make_environment
  std::string backend;          // "oracle-table" | "llm-client"
  std::string table_path;       // oracle-table backend
  client::ClientConfig client_config;  // llm-client backend
  GenConfig gen_config;
  std::string prompt_template = "os";
  int concurrency = 1;
  AnswerMatcher matcher;
  SelectionMode selection = SelectionMode::kUniform;
};

RunPlan parse_plan_json(const std::string& text);
RunPlan load_plan(const std::string& path);

// One sampled TDP against a fresh environment episode.
TdpRecord run_tdp(SamplerBackend& backend, env::Environment& environment,
                  const PromptBuilder& prompts, const TaskSpec& task,
                  const GenConfig& gen, SelectionMode selection, Rng& rng);

// Greedy rollout + Z TDPs; fails whole (no partial record) on any error.
TaskRecord run_task(SamplerBackend& backend,
                    const std::function<std::unique_ptr<env::Environment>()>&
                        env_factory,
                    const PromptBuilder& prompts, const TaskSpec& task,
                    const RunPlan& plan, std::uint64_t task_seed);

// Runs every task in the plan (up to plan.concurrency in parallel) and
// returns the records in task order.
std::vector<TaskRecord> run_plan(const RunPlan& plan);

}  // namespace uprop::orchestrator
