#include "uprop/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "json.hpp"
#include "uprop/io_util.hpp"
#include "uprop/templates.hpp"
#include "uprop/textdist.hpp"

namespace uprop::orchestrator {

using nlohmann::json;

namespace {

std::string fold(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return std::string();
  std::size_t e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

bool grade_answer(const std::string& pred, const std::string& gold,
                  const AnswerMatcher& matcher) {
  switch (matcher.mode) {
    case MatchMode::kExact:
      return fold(pred) == fold(gold);
    case MatchMode::kFuzzy:
      return textdist::decision_distance(pred, gold) <= matcher.threshold;
    case MatchMode::kContains:
      return fold(pred).find(fold(gold)) != std::string::npos;
  }
  return false;
}

// --- OracleTableBackend ------------------------------------------------------

OracleTableBackend::OracleTableBackend(oracle::ProcessTable table)
    : table_(std::move(table)) {
  oracle::validate_table(table_);
}

const std::vector<double>& OracleTableBackend::conditional(
    const std::vector<std::string>& action_history) const {
  if (static_cast<int>(action_history.size()) >= table_.horizon) {
    throw InputError("oracle backend: history already at horizon");
  }
  auto it = table_.conditionals.find(oracle::history_key(action_history));
  if (it == table_.conditionals.end()) {
    throw InputError("oracle backend: history \"" +
                     oracle::history_key(action_history) +
                     "\" is not in the table");
  }
  return it->second;
}

Decision OracleTableBackend::make_decision(int step, std::size_t index,
                                           const std::vector<double>& cond)
    const {
  Decision d;
  d.action_text = table_.alphabets[step][index];
  d.full_text = d.action_text;
  double lp = std::log(cond[index]);
  d.token_logprobs = {lp};
  d.seq_logprob = lp;
  d.token_count = 1;
  return d;
}

std::vector<Decision> OracleTableBackend::sample(
    const std::vector<client::ChatMessage>&,
    const std::vector<std::string>& action_history, int n, const GenConfig&,
    Rng& rng) {
  const std::vector<double>& cond = conditional(action_history);
  int step = static_cast<int>(action_history.size());
  std::vector<Decision> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(make_decision(step, rng.categorical(cond), cond));
  }
  return out;
}

Decision OracleTableBackend::greedy(
    const std::vector<client::ChatMessage>&,
    const std::vector<std::string>& action_history, const GenConfig&) {
  const std::vector<double>& cond = conditional(action_history);
  std::size_t best = 0;
  for (std::size_t i = 1; i < cond.size(); ++i) {
    if (cond[i] > cond[best]) best = i;
  }
  return make_decision(static_cast<int>(action_history.size()), best, cond);
}

// --- LlmBackend ---------------------------------------------------------------

LlmBackend::LlmBackend(client::ClientConfig cfg)
    : client_(std::move(cfg)) {}

std::vector<Decision> LlmBackend::sample(
    const std::vector<client::ChatMessage>& messages,
    const std::vector<std::string>&, int n, const GenConfig& gen, Rng&) {
  return client_.sample_n(messages, n, gen).decisions;
}

Decision LlmBackend::greedy(const std::vector<client::ChatMessage>& messages,
                            const std::vector<std::string>&,
                            const GenConfig& gen) {
  return client_.greedy(messages, gen);
}

// --- PromptBuilder -------------------------------------------------------------

PromptBuilder::PromptBuilder(std::string template_id,
                             std::size_t observation_budget)
    : template_id_(std::move(template_id)),
      observation_budget_(observation_budget) {
  if (template_id_ != "os" && template_id_ != "react") {
    throw InputError("unknown prompt template \"" + template_id_ + "\"");
  }
}

std::vector<client::ChatMessage> PromptBuilder::initial(
    const std::string& instruction, const std::string& first_obs) const {
  std::vector<client::ChatMessage> messages =
      template_id_ == "os" ? os_template_messages(instruction)
                           : react_template_messages(instruction);
  if (!first_obs.empty()) {
    messages.back().content +=
        "\n\n" + env::truncate_observation(first_obs, observation_budget_);
  }
  return messages;
}

void PromptBuilder::append_turn(std::vector<client::ChatMessage>& messages,
                                const std::string& generation,
                                const std::string& observation,
                                int step_index) const {
  messages.push_back({"assistant", generation});
  std::string obs = env::truncate_observation(observation, observation_budget_);
  if (template_id_ == "os") {
    messages.push_back({"user", "The output of the OS:\n" + obs});
  } else {
    messages.push_back(
        {"user", "Observation " + std::to_string(step_index) + ": " + obs});
  }
}

// --- rollouts -----------------------------------------------------------------

namespace {

int select_realization(const std::vector<Decision>& decisions,
                       SelectionMode selection, Rng& rng) {
  if (selection == SelectionMode::kUniform) {
    return static_cast<int>(rng.uniform_index(decisions.size()));
  }
  // Probability-proportional over the drawn samples, in shifted linear space.
  double max_lp = -std::numeric_limits<double>::infinity();
  for (const auto& d : decisions) max_lp = std::max(max_lp, d.seq_logprob);
  std::vector<double> weights;
  weights.reserve(decisions.size());
  for (const auto& d : decisions) {
    weights.push_back(std::exp(d.seq_logprob - max_lp));
  }
  return static_cast<int>(rng.categorical(weights));
}

}  // namespace

TdpRecord run_tdp(SamplerBackend& backend, env::Environment& environment,
                  const PromptBuilder& prompts, const TaskSpec& task,
                  const GenConfig& gen, SelectionMode selection, Rng& rng) {
  env::EnvResponse first = environment.reset(task.task_id);
  std::vector<client::ChatMessage> messages =
      prompts.initial(task.instruction, first.observation);
  std::vector<std::string> action_history;

  TdpRecord tdp;
  for (int t = 0; t < gen.max_steps; ++t) {
    std::vector<Decision> samples =
        backend.sample(messages, action_history, gen.samples_per_step, gen,
                       rng);
    for (Decision& d : samples) {
      d.action_text = env::parse_action(d.full_text).canonical();
    }
    int chosen = select_realization(samples, selection, rng);
    const Decision& realized = samples[chosen];
    env::ParsedAction action = env::parse_action(realized.full_text);
    env::EnvResponse resp = environment.step(action);

    StepRecord step;
    step.samples = std::move(samples);
    step.chosen_index = chosen;
    step.observation = resp.observation;
    action_history.push_back(step.chosen().action_text);
    prompts.append_turn(messages, realized.full_text, resp.observation, t + 1);
    tdp.steps.push_back(std::move(step));

    if (resp.terminated) {
      tdp.terminated = true;
      tdp.final_answer = resp.final_answer.value_or("");
      return tdp;
    }
  }
  tdp.truncated = true;
  return tdp;
}

namespace {

std::optional<std::string> greedy_rollout(
    SamplerBackend& backend, env::Environment& environment,
    const PromptBuilder& prompts, const TaskSpec& task, const GenConfig& gen) {
  env::EnvResponse first = environment.reset(task.task_id);
  std::vector<client::ChatMessage> messages =
      prompts.initial(task.instruction, first.observation);
  std::vector<std::string> action_history;
  for (int t = 0; t < gen.max_steps; ++t) {
    Decision d = backend.greedy(messages, action_history, gen);
    env::ParsedAction action = env::parse_action(d.full_text);
    env::EnvResponse resp = environment.step(action);
    action_history.push_back(action.canonical());
    prompts.append_turn(messages, d.full_text, resp.observation, t + 1);
    if (resp.terminated) return resp.final_answer.value_or("");
  }
  return std::nullopt;
}

}  // namespace

TaskRecord run_task(SamplerBackend& backend,
                    const std::function<std::unique_ptr<env::Environment>()>&
                        env_factory,
                    const PromptBuilder& prompts, const TaskSpec& task,
                    const RunPlan& plan, std::uint64_t task_seed) {
  TaskRecord record;
  record.task_id = task.task_id;
  record.instruction = task.instruction;
  record.model_ref = plan.backend == "llm-client"
                         ? plan.client_config.model_ref
                         : "oracle:" + plan.table_path;
  record.gen_config = plan.gen_config;
  record.gen_config.seed = static_cast<int64_t>(task_seed);

  {
    std::unique_ptr<env::Environment> episode = env_factory();
    record.greedy_answer =
        greedy_rollout(backend, *episode, prompts, task, plan.gen_config);
  }
  if (task.gold) {
    record.correct = record.greedy_answer
                         ? grade_answer(*record.greedy_answer, *task.gold,
                                        plan.matcher)
                         : false;
  }

  record.tdps.reserve(plan.gen_config.tdp_count);
  for (int z = 0; z < plan.gen_config.tdp_count; ++z) {
    Rng rng(derive_seed(task_seed, static_cast<std::uint64_t>(z)));
    std::unique_ptr<env::Environment> episode = env_factory();
    record.tdps.push_back(run_tdp(backend, *episode, prompts, task,
                                  plan.gen_config, plan.selection, rng));
  }
  validate(record);
  return record;
}

std::vector<TaskRecord> run_plan(const RunPlan& plan) {
  if (plan.tasks.empty()) throw InputError("run plan has no tasks");
  if (plan.gen_config.samples_per_step < 2) {
    throw ValidationError("gen_config.n", "must be >= 2 for TDP sampling");
  }

  std::unique_ptr<SamplerBackend> backend;
  if (plan.backend == "oracle-table") {
    backend =
        std::make_unique<OracleTableBackend>(oracle::load_table(plan.table_path));
  } else if (plan.backend == "llm-client") {
    backend = std::make_unique<LlmBackend>(plan.client_config);
  } else {
    throw InputError("unknown backend \"" + plan.backend + "\"");
  }
  PromptBuilder prompts(plan.prompt_template);
  auto env_factory = [&plan]() {
    return env::make_environment(plan.env_params_json);
  };

  const int n_tasks = static_cast<int>(plan.tasks.size());
  std::vector<TaskRecord> records(n_tasks);
  std::exception_ptr first_error;

  const int threads = std::max(1, std::min(plan.concurrency, n_tasks));
#pragma omp parallel for schedule(dynamic) num_threads(threads) \
    if (threads > 1)
  for (int i = 0; i < n_tasks; ++i) {
    try {
      records[i] = run_task(*backend, env_factory, prompts, plan.tasks[i],
                            plan, derive_seed(plan.gen_config.seed, i));
    } catch (...) {
#pragma omp critical
      {
        if (!first_error) first_error = std::current_exception();
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return records;
}

// --- plan parsing ---------------------------------------------------------------

RunPlan parse_plan_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed plan JSON: " + std::string(e.what()),
                     static_cast<long long>(e.byte));
  }
  RunPlan plan;
  try {
    for (const auto& t : j.at("tasks")) {
      TaskSpec spec;
      spec.task_id = t.at("task_id").get<std::string>();
      spec.instruction = t.at("instruction").get<std::string>();
      if (t.contains("gold") && !t["gold"].is_null()) {
        spec.gold = t["gold"].get<std::string>();
      }
      plan.tasks.push_back(std::move(spec));
    }
    plan.env_params_json = j.at("env").dump();
    plan.backend = j.at("backend").get<std::string>();
    if (plan.backend == "oracle-table") {
      plan.table_path = j.at("backend_params").at("table").get<std::string>();
    } else if (plan.backend == "llm-client") {
      const json& bp = j.at("backend_params");
      plan.client_config.base_url = bp.at("base_url").get<std::string>();
      plan.client_config.model_ref = bp.at("model_ref").get<std::string>();
      plan.client_config.api_key_env =
          bp.value("api_key_env", plan.client_config.api_key_env);
      plan.client_config.request_timeout =
          bp.value("request_timeout", plan.client_config.request_timeout);
      plan.client_config.max_retries =
          bp.value("max_retries", plan.client_config.max_retries);
      plan.client_config.backoff_base =
          bp.value("backoff_base", plan.client_config.backoff_base);
      plan.client_config.max_inflight =
          bp.value("max_inflight", plan.client_config.max_inflight);
      plan.client_config.batch_samples =
          bp.value("batch_samples", plan.client_config.batch_samples);
    }
    if (j.contains("gen_config")) {
      const json& g = j["gen_config"];
      plan.gen_config.temperature =
          g.value("temperature", plan.gen_config.temperature);
      plan.gen_config.max_new_tokens =
          g.value("max_new_tokens", plan.gen_config.max_new_tokens);
      plan.gen_config.samples_per_step =
          g.value("n", plan.gen_config.samples_per_step);
      plan.gen_config.tdp_count = g.value("z", plan.gen_config.tdp_count);
      plan.gen_config.max_steps =
          g.value("max_steps", plan.gen_config.max_steps);
      plan.gen_config.seed = g.value("seed", plan.gen_config.seed);
    }
    plan.prompt_template = j.value("prompt_template", plan.prompt_template);
    plan.concurrency = j.value("concurrency", plan.concurrency);
    if (j.contains("matcher")) {
      const json& m = j["matcher"];
      std::string mode = m.value("mode", "exact");
      if (mode == "exact") {
        plan.matcher.mode = MatchMode::kExact;
      } else if (mode == "fuzzy") {
        plan.matcher.mode = MatchMode::kFuzzy;
      } else if (mode == "contains") {
        plan.matcher.mode = MatchMode::kContains;
      } else {
        throw ValidationError("matcher.mode", "must be exact|fuzzy|contains");
      }
      plan.matcher.threshold = m.value("threshold", plan.matcher.threshold);
    }
    std::string selection = j.value("selection", "uniform");
    if (selection == "uniform") {
      plan.selection = SelectionMode::kUniform;
    } else if (selection == "weighted") {
      plan.selection = SelectionMode::kWeighted;
    } else {
      throw ValidationError("selection", "must be uniform|weighted");
    }
  } catch (const json::exception& e) {
    throw ValidationError("plan", std::string("missing or mistyped field: ") +
                                      e.what());
  }
  validate(plan.gen_config);
  if (plan.matcher.threshold < 0.0 || plan.matcher.threshold > 1.0) {
    throw ValidationError("matcher.threshold", "must be in [0, 1]");
  }
  return plan;
}

RunPlan load_plan(const std::string& path) {
  return parse_plan_json(read_file(path));
}

}  // namespace uprop::orchestrator
