#pragma once

// The seven single-step UQ baselines and the per-trajectory aggregation
// strategies they are compared under. All of them read one StepRecord at a
// time; trajectory and task totals are plain aggregations.

#include <span>
#include <string>
#include <vector>

#include "uprop/model.hpp"

namespace uprop::baselines {

enum class Method {
  kPpl,      // mean per-token perplexity
  kLs,       // lexical dissimilarity: 1 - mean pairwise similarity
  kPe,       // predictive entropy
  kSe,       // semantic entropy over string clusters
  kDeg,      // 1 - mean of the full similarity matrix
  kSd,       // 1 - probability-weighted kernel density at the chosen sample
  kSentSar,  // similarity-shifted sequence probabilities
};

enum class Aggregation {
  kAvg,
  kRms,
};

// Disjoint cover of sample indices [0, N). Clusters are listed in founding
// order; each cluster's first element is its lowest-index member.
struct ClusterPartition {
  std::vector<std::vector<std::size_t>> clusters;
};

// Greedy single-link clustering over action strings: a sample joins the
// first cluster whose representative (lowest-index member) is within
// distance 1 - sim_threshold, otherwise founds a new cluster.
ClusterPartition cluster_samples(const StepRecord& step, double sim_threshold);

// One baseline value for one step. Methods needing pairwise structure
// (LS, DEG, SD, SENTSAR) require N >= 2.
double baseline_step(Method method, const StepRecord& step,
                     double sim_threshold);

double aggregate_tdp(std::span<const double> per_step, Aggregation mode);

// Mean over TDPs of the aggregated per-step baseline values.
double baseline_task(const TaskRecord& task, Method method, Aggregation agg,
                     double sim_threshold);

const char* method_name(Method m);
const char* aggregation_name(Aggregation a);
bool parse_method(const std::string& name, Method& out);
bool parse_aggregation(const std::string& name, Aggregation& out);

}  // namespace uprop::baselines
