#include "uprop/model.hpp"

#include <cmath>
#include <cstddef>

namespace uprop {

namespace {

std::string idx(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

void validate_decision_at(const Decision& d, const std::string& path) {
  if (d.token_count != static_cast<int>(d.token_logprobs.size())) {
    throw ValidationError(path + ".token_count",
                          "must equal token_logprobs length (" +
                              std::to_string(d.token_logprobs.size()) + ")");
  }
  if (d.token_count <= 0) {
    throw ValidationError(path + ".token_count", "must be positive");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < d.token_logprobs.size(); ++i) {
    double lp = d.token_logprobs[i];
    if (!(lp <= 0.0) || std::isnan(lp)) {
      throw ValidationError(idx(path + ".token_logprobs", i),
                            "must be a log-probability <= 0");
    }
    sum += lp;
  }
  double tol = kSeqLogprobTolerance * std::max(1.0, std::abs(sum));
  if (std::isnan(d.seq_logprob) || std::abs(d.seq_logprob - sum) > tol) {
    throw ValidationError(
        path + ".seq_logprob",
        "differs from the token_logprobs sum by more than the 1e-9 tolerance");
  }
}

void validate_step_at(const StepRecord& s, const std::string& path) {
  if (s.samples.empty()) {
    throw ValidationError(path + ".samples", "must be non-empty");
  }
  if (s.chosen_index < 0 ||
      s.chosen_index >= static_cast<int>(s.samples.size())) {
    throw ValidationError(path + ".chosen_index",
                          "must be in [0, " +
                              std::to_string(s.samples.size()) + ")");
  }
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    validate_decision_at(s.samples[i], idx(path + ".samples", i));
  }
}

void validate_tdp_at(const TdpRecord& t, const std::string& path) {
  if (t.steps.empty()) {
    throw ValidationError(path + ".steps", "must have at least one step");
  }
  if (t.terminated && t.truncated) {
    throw ValidationError(path + ".terminated",
                          "terminated and truncated are mutually exclusive");
  }
  if (t.terminated != t.final_answer.has_value()) {
    throw ValidationError(path + ".final_answer",
                          "must be present iff terminated");
  }
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    validate_step_at(t.steps[i], idx(path + ".steps", i));
  }
}

}  // namespace

void validate(const Decision& d) { validate_decision_at(d, "decision"); }
void validate(const StepRecord& s) { validate_step_at(s, "step"); }
void validate(const TdpRecord& t) { validate_tdp_at(t, "tdp"); }

void validate(const GenConfig& g) {
  if (!(g.temperature > 0.0)) {
    throw ValidationError("gen_config.temperature", "must be > 0");
  }
  if (g.max_new_tokens <= 0) {
    throw ValidationError("gen_config.max_new_tokens", "must be positive");
  }
  if (g.samples_per_step <= 0) {
    throw ValidationError("gen_config.n", "must be positive");
  }
  if (g.tdp_count <= 0) {
    throw ValidationError("gen_config.z", "must be positive");
  }
  if (g.max_steps <= 0) {
    throw ValidationError("gen_config.max_steps", "must be positive");
  }
}

void validate(const TaskRecord& t) {
  if (t.task_id.empty()) {
    throw ValidationError("task_id", "must be non-empty");
  }
  validate(t.gen_config);
  for (std::size_t i = 0; i < t.tdps.size(); ++i) {
    validate_tdp_at(t.tdps[i], idx("tdps", i));
  }
}

}  // namespace uprop
