#pragma once

// Exactly-enumerable discrete decision processes. A ProcessTable pins down
// p(y_t | y_{1:t-1}) for every step and history, so every information
// quantity the estimators approximate can be computed here by brute force:
// total process entropy, per-step marginal/conditional entropies, mutual
// information, and pointwise MI for any realized history.
//
// Enumeration and the convergence experiment have OpenMP-parallel kernels;
// the *_serial variants are the reference implementations kept for testing
// and benchmarking. Parallel results are bit-stable across thread counts for
// sampling (per-TDP rng streams) and agree with serial to floating-point
// reduction tolerance for entropy sums.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "uprop/estimators.hpp"
#include "uprop/model.hpp"
#include "uprop/rng.hpp"

namespace uprop::oracle {

inline constexpr std::uint64_t kMaxEnumeration = 1'000'000;

// Conditional distributions keyed by the decision history, joined with "|".
// The empty key holds the first step's distribution. Actions must not
// contain the separator.
struct ProcessTable {
  int horizon = 0;
  std::vector<std::vector<std::string>> alphabets;  // one per step
  std::map<std::string, std::vector<double>> conditionals;
};

// Throws ValidationError on incomplete tables, vectors not summing to 1
// within 1e-12, negative entries, or separator misuse.
void validate_table(const ProcessTable& table);

std::string history_key(std::span<const std::string> history);

// Number of full trajectories; SizeError above kMaxEnumeration.
std::uint64_t trajectory_count(const ProcessTable& table);

// H(P) = -sum over full trajectories p ln p, in nats.
double exact_total_entropy(const ProcessTable& table);
double exact_total_entropy_serial(const ProcessTable& table);

struct EntropyDecomposition {
  double marginal_entropy = 0.0;     // H(y_t | x)
  double conditional_entropy = 0.0;  // H(y_t | y_{1:t-1}, x)
  double mi_sum = 0.0;               // their difference
};

// Step index t is 1-based. marginal = conditional + mi_sum holds to 1e-12.
EntropyDecomposition exact_entropy_decomposition(const ProcessTable& table,
                                                 int t);

// Marginal distribution of y_t for every step, by enumeration.
std::vector<std::vector<double>> exact_step_marginals(
    const ProcessTable& table);

// KL( p(y_t | history) || p(y_t | x) ) for a realized history of length
// t - 1 (t is 1-based). The first step's PMI is identically 0.
double exact_pmi(const ProcessTable& table, int t,
                 std::span<const std::string> history);

// Observation encoding used by oracle-backed TDPs: "step=<next>" plus the
// realized history, a pure function of the decisions so far.
std::string history_observation(int next_step, std::span<const std::string> history);

// Samples one TDP from the table: N draws per step from the realized
// history's conditional, one chosen uniformly among them. Oracle decisions
// carry one token whose logprob is the exact table log-probability.
TdpRecord sample_tdp_exact(const ProcessTable& table, int n_samples, Rng& rng);

// Per-TDP totals for the convergence experiment.
//   exact path   sum_t [ H(p(.|h_t)) + sum_{i<t} exact_pmi(i, h_i) ]
//                (conditional entropies and PMIs straight from the table)
//   kernel path  estimators::score_tdp raw total on the sampled record
// TDP z draws from its own derived stream, so results do not depend on
// thread count.
struct TdpTotals {
  std::vector<double> exact_path;
  std::vector<double> kernel_path;
};

TdpTotals per_tdp_totals(const ProcessTable& table, int z_count, int n_samples,
                         std::uint64_t seed, estimators::PmiMode pmi_mode);
TdpTotals per_tdp_totals_serial(const ProcessTable& table, int z_count,
                                int n_samples, std::uint64_t seed,
                                estimators::PmiMode pmi_mode);

struct ConvergencePoint {
  int z = 0;
  double exact_mean = 0.0;
  double exact_stderr = 0.0;
  double exact_rel_error = 0.0;
  double kernel_mean = 0.0;
  double kernel_stderr = 0.0;
  double kernel_rel_error = 0.0;
};

struct ConvergenceReport {
  double exact_entropy = 0.0;  // ground truth from enumeration
  std::vector<ConvergencePoint> points;
};

// Runs both estimation paths over each Z in the grid, reporting mean,
// standard error of the mean, and relative error against the enumerated
// ground truth. Sampling is prefix-nested: the TDP stream for a given seed
// is shared across grid entries.
ConvergenceReport convergence_experiment(const ProcessTable& table,
                                         std::span<const int> z_grid,
                                         int n_samples, std::uint64_t seed,
                                         estimators::PmiMode pmi_mode);

// Table file format: JSON {horizon, alphabets, conditionals}.
ProcessTable parse_table_json(const std::string& text);
std::string table_to_json(const ProcessTable& table);
ProcessTable load_table(const std::string& path);

}  // namespace uprop::oracle
