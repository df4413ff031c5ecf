#pragma once

// Intrinsic entropy, kernel-PMI extrinsic uncertainty, step
// length-normalization, and the trajectory-level score.
//
// Per TDP, step t carries
//   IU_t = predictive entropy of step t's sample set, and
//   EU_t = sum over preceding steps i < t of the kernel PMI of step i,
// where the kernel PMI of a step measures the spread of its N samples around
// the chosen realization through a Gaussian kernel over string distance.
// EU_1 is exactly 0: the first step has no predecessors.
//
// The kernel PMI comes in two modes:
//   kFaithful    -ln sum_n K_tau(d_n)            (tau = N)
//   kCalibrated  -ln[(1/N) sum_n exp(-tau d_n^2/2)]
// They differ by the constant (tau/2) ln(2*pi) - ln N. kCalibrated is exactly
// 0 for a degenerate sample set (all N samples identical), so a
// zero-variance predecessor contributes no extrinsic uncertainty.
//
// A TDP's total is length-normalized by lambda = sum_t sigma_t with
// sigma_t = 1 + EU_t / max(IU_t, iu_floor), making TDPs of different lengths
// comparable.

#include <span>
#include <vector>

#include "uprop/model.hpp"

namespace uprop::estimators {

enum class IntrinsicMode {
  kPe,    // -(1/N) sum_n seq_logprob_n
  kLnPe,  // -(1/N) sum_n seq_logprob_n / token_count_n
};

enum class PmiMode {
  kFaithful,
  kCalibrated,
};

struct EpsilonPolicy {
  double iu_floor = 1e-6;  // nats; guards the EU/IU ratio in sigma_t
};

// Predictive entropy of one step's sample set, clamped at 0 from below.
double intrinsic_entropy(const StepRecord& step, IntrinsicMode mode);

// Kernel PMI from a vector of distances to the chosen sample. Exposed so the
// arithmetic is testable straight from distance vectors.
double pmi_from_distances(std::span<const double> distances, int tau,
                          PmiMode mode);

// Kernel PMI of one step: distances are decision_distance between each
// sample's action_text and the chosen sample's (the chosen contributes
// d = 0). Requires N >= 2.
double pmi_step(const StepRecord& step, int tau, PmiMode mode);

// Assembles sigma / lambda / totals / fractions from per-step IU and
// cumulative EU vectors. Split out so the normalization arithmetic can be
// property-tested on synthetic vectors.
ScoreBreakdown assemble_breakdown(std::vector<double> per_step_iu,
                                  std::vector<double> per_step_eu,
                                  const EpsilonPolicy& eps);

// Scores one TDP. tau for step i's kernel is that step's own N.
ScoreBreakdown score_tdp(const TdpRecord& tdp, IntrinsicMode intrinsic,
                         PmiMode pmi, const EpsilonPolicy& eps);

struct UPropResult {
  double score = 0.0;  // mean normalized total over the filtered TDP set
  bool fallback = false;  // set when no TDP matched the greedy answer
  std::vector<ScoreBreakdown> breakdowns;  // one per TDP, in input order
  std::vector<bool> matched;               // which TDPs passed the filter
};

// Task-level score: mean normalized total over the TDPs whose final answer
// is within match_threshold of the greedy answer; falls back to the mean
// over all TDPs (flagged) when none match or no greedy answer is recorded.
UPropResult uprop_score(const TaskRecord& task, double match_threshold,
                        IntrinsicMode intrinsic, PmiMode pmi,
                        const EpsilonPolicy& eps);

struct StepFractionSeries {
  std::vector<double> iu_mean;       // mean IU/(IU+EU) at each step index
  std::vector<double> eu_mean;       // complement series
  std::vector<std::size_t> tdp_count;  // TDPs contributing at each index
};

// Per-step-index mean fractions over every TDP of every task that has at
// least that many steps.
StepFractionSeries iu_eu_fractions(std::span<const TaskRecord> tasks,
                                   IntrinsicMode intrinsic, PmiMode pmi,
                                   const EpsilonPolicy& eps);

}  // namespace uprop::estimators
