#include "uprop/serialize.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "json.hpp"
#include "uprop/io_util.hpp"

namespace uprop {

using nlohmann::json;

namespace {

json opt_string(const std::optional<std::string>& v) {
  return v ? json(*v) : json(nullptr);
}

json opt_bool(const std::optional<bool>& v) {
  return v ? json(*v) : json(nullptr);
}

json decision_to_json(const Decision& d) {
  return json{{"action_text", d.action_text},
              {"full_text", d.full_text},
              {"token_logprobs", d.token_logprobs},
              {"seq_logprob", d.seq_logprob}};
}

json step_to_json(const StepRecord& s) {
  json samples = json::array();
  for (const auto& d : s.samples) samples.push_back(decision_to_json(d));
  return json{{"samples", std::move(samples)},
              {"chosen_index", s.chosen_index},
              {"observation", s.observation}};
}

json tdp_to_json(const TdpRecord& t) {
  json steps = json::array();
  for (const auto& s : t.steps) steps.push_back(step_to_json(s));
  return json{{"steps", std::move(steps)},
              {"final_answer", opt_string(t.final_answer)},
              {"terminated", t.terminated},
              {"truncated", t.truncated}};
}

// --- parsing -------------------------------------------------------------

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed, ParseMode mode) {
  if (!obj.is_object()) {
    throw ValidationError(path, "must be a JSON object");
  }
  if (mode == ParseMode::kLenient) return;
  std::set<std::string_view> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) {
      throw ValidationError(path + "." + it.key(),
                            "unknown field (strict mode)");
    }
  }
}

const json& require(const json& obj, const std::string& path,
                    const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError(path + "." + key, "missing required field");
  }
  return *it;
}

template <typename T>
T get_as(const json& v, const std::string& path) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ValidationError(path, "has the wrong JSON type");
  }
}

std::optional<std::string> get_opt_string(const json& v,
                                          const std::string& path) {
  if (v.is_null()) return std::nullopt;
  return get_as<std::string>(v, path);
}

std::optional<bool> get_opt_bool(const json& v, const std::string& path) {
  if (v.is_null()) return std::nullopt;
  return get_as<bool>(v, path);
}

Decision decision_from_json(const json& j, const std::string& path,
                            ParseMode mode) {
  check_keys(j, path, {"action_text", "full_text", "token_logprobs",
                       "seq_logprob"},
             mode);
  Decision d;
  d.action_text = get_as<std::string>(require(j, path, "action_text"),
                                      path + ".action_text");
  d.full_text =
      get_as<std::string>(require(j, path, "full_text"), path + ".full_text");
  d.token_logprobs = get_as<std::vector<double>>(
      require(j, path, "token_logprobs"), path + ".token_logprobs");
  d.seq_logprob =
      get_as<double>(require(j, path, "seq_logprob"), path + ".seq_logprob");
  d.token_count = static_cast<int>(d.token_logprobs.size());
  return d;
}

StepRecord step_from_json(const json& j, const std::string& path,
                          ParseMode mode) {
  check_keys(j, path, {"samples", "chosen_index", "observation"}, mode);
  StepRecord s;
  const json& samples = require(j, path, "samples");
  if (!samples.is_array()) {
    throw ValidationError(path + ".samples", "must be an array");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    s.samples.push_back(decision_from_json(
        samples[i], path + ".samples[" + std::to_string(i) + "]", mode));
  }
  s.chosen_index =
      get_as<int>(require(j, path, "chosen_index"), path + ".chosen_index");
  s.observation = get_as<std::string>(require(j, path, "observation"),
                                      path + ".observation");
  return s;
}

TdpRecord tdp_from_json(const json& j, const std::string& path,
                        ParseMode mode) {
  check_keys(j, path, {"steps", "final_answer", "terminated", "truncated"},
             mode);
  TdpRecord t;
  const json& steps = require(j, path, "steps");
  if (!steps.is_array()) {
    throw ValidationError(path + ".steps", "must be an array");
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    t.steps.push_back(step_from_json(
        steps[i], path + ".steps[" + std::to_string(i) + "]", mode));
  }
  t.final_answer =
      get_opt_string(require(j, path, "final_answer"), path + ".final_answer");
  t.terminated =
      get_as<bool>(require(j, path, "terminated"), path + ".terminated");
  t.truncated =
      get_as<bool>(require(j, path, "truncated"), path + ".truncated");
  return t;
}

GenConfig gen_config_from_json(const json& j, const std::string& path,
                               ParseMode mode) {
  check_keys(j, path, {"temperature", "max_new_tokens", "n", "z", "max_steps",
                       "seed"},
             mode);
  GenConfig g;
  g.temperature =
      get_as<double>(require(j, path, "temperature"), path + ".temperature");
  g.max_new_tokens = get_as<int>(require(j, path, "max_new_tokens"),
                                 path + ".max_new_tokens");
  g.samples_per_step = get_as<int>(require(j, path, "n"), path + ".n");
  g.tdp_count = get_as<int>(require(j, path, "z"), path + ".z");
  g.max_steps =
      get_as<int>(require(j, path, "max_steps"), path + ".max_steps");
  g.seed = get_as<int64_t>(require(j, path, "seed"), path + ".seed");
  return g;
}

}  // namespace

std::string serialize_task(const TaskRecord& task) {
  validate(task);
  json tdps = json::array();
  for (const auto& t : task.tdps) tdps.push_back(tdp_to_json(t));
  json j{{"task_id", task.task_id},
         {"instruction", task.instruction},
         {"greedy_answer", opt_string(task.greedy_answer)},
         {"correct", opt_bool(task.correct)},
         {"model_ref", task.model_ref},
         {"gen_config",
          json{{"temperature", task.gen_config.temperature},
               {"max_new_tokens", task.gen_config.max_new_tokens},
               {"n", task.gen_config.samples_per_step},
               {"z", task.gen_config.tdp_count},
               {"max_steps", task.gen_config.max_steps},
               {"seed", task.gen_config.seed}}},
         {"tdps", std::move(tdps)}};
  return j.dump();
}

TaskRecord deserialize_task(std::string_view line, ParseMode mode) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(),
                     static_cast<long long>(e.byte));
  }
  const std::string path = "task";
  check_keys(j, path, {"task_id", "instruction", "greedy_answer", "correct",
                       "model_ref", "gen_config", "tdps"},
             mode);
  TaskRecord t;
  t.task_id = get_as<std::string>(require(j, path, "task_id"), "task_id");
  t.instruction =
      get_as<std::string>(require(j, path, "instruction"), "instruction");
  t.greedy_answer =
      get_opt_string(require(j, path, "greedy_answer"), "greedy_answer");
  t.correct = get_opt_bool(require(j, path, "correct"), "correct");
  t.model_ref = get_as<std::string>(require(j, path, "model_ref"), "model_ref");
  t.gen_config =
      gen_config_from_json(require(j, path, "gen_config"), "gen_config", mode);
  const json& tdps = require(j, path, "tdps");
  if (!tdps.is_array()) {
    throw ValidationError("tdps", "must be an array");
  }
  for (std::size_t i = 0; i < tdps.size(); ++i) {
    t.tdps.push_back(
        tdp_from_json(tdps[i], "tdps[" + std::to_string(i) + "]", mode));
  }
  validate(t);
  return t;
}

std::vector<TaskRecord> read_trajectory_file(const std::string& path,
                                             ParseMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trajectory file: " + path);
  std::vector<TaskRecord> tasks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      tasks.push_back(deserialize_task(line, mode));
    } catch (const Error& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return tasks;
}

void write_trajectory_file(const std::string& path,
                           const std::vector<TaskRecord>& tasks) {
  std::ostringstream out;
  for (const auto& t : tasks) out << serialize_task(t) << '\n';
  write_file_atomic(path, out.str());
}

}  // namespace uprop
