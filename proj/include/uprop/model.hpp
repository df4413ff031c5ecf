#pragma once

// Domain types for tasks and trajectories. All log-probabilities are natural
// logs (nats); entropies and PMIs downstream inherit the unit. Records are
// immutable by convention after validate() and safe to share across threads.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uprop/errors.hpp"

namespace uprop {

// One sampled model output at one step.
struct Decision {
  std::string action_text;             // parsed action, e.g. "Search[High Plains]"
  std::string full_text;               // entire generation
  std::vector<double> token_logprobs;  // nats, each <= 0
  double seq_logprob = 0.0;            // nats; checked against the token sum
  int token_count = 0;                 // == token_logprobs.size()
};

// The N per-step samples, the chosen realization, and the observation that
// followed it.
struct StepRecord {
  std::vector<Decision> samples;
  int chosen_index = 0;
  std::string observation;

  const Decision& chosen() const { return samples.at(chosen_index); }
};

// One Trajectory-Dependent Decision Process: a chain of steps ending either
// in a terminal answer or in truncation at the step budget.
struct TdpRecord {
  std::vector<StepRecord> steps;
  std::optional<std::string> final_answer;  // present iff terminated
  bool terminated = false;
  bool truncated = false;
};

struct GenConfig {
  double temperature = 0.8;
  int max_new_tokens = 512;
  int samples_per_step = 10;  // the paper-facing N
  int tdp_count = 10;         // the paper-facing Z
  int max_steps = 15;
  int64_t seed = 0;
};

struct TaskRecord {
  std::string task_id;
  std::string instruction;
  std::optional<std::string> greedy_answer;
  std::optional<bool> correct;
  std::vector<TdpRecord> tdps;
  std::string model_ref;
  GenConfig gen_config;
};

// Per-TDP scoring detail: intrinsic/extrinsic split, inflation factors, and
// the length-normalized total.
struct ScoreBreakdown {
  std::vector<double> per_step_iu;  // nats, >= 0
  std::vector<double> per_step_eu;  // nats
  std::vector<double> sigma;        // 1 + EU/IU per step, >= 1
  double lambda = 0.0;              // sum of sigma, >= T
  double tdp_total_raw = 0.0;
  double tdp_total_normalized = 0.0;
  std::vector<double> iu_fraction;  // IU/(IU+EU), 0/0 defined as 1
  std::vector<double> eu_fraction;  // complement
};

// ---------------------------------------------------------------------------
// Validation. Each function throws ValidationError naming the failing field;
// validation is total: every record either validates or names a field.
// ---------------------------------------------------------------------------

inline constexpr double kSeqLogprobTolerance = 1e-9;

void validate(const Decision& d);
void validate(const StepRecord& s);
void validate(const TdpRecord& t);
void validate(const GenConfig& g);
void validate(const TaskRecord& t);

}  // namespace uprop
