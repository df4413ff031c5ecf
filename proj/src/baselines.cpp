#include "uprop/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uprop/textdist.hpp"

namespace uprop::baselines {

namespace {

// Full similarity matrix, sim(i,j) = 1 - decision_distance. Diagonal is 1.
std::vector<std::vector<double>> similarity_matrix(const StepRecord& step) {
  const std::size_t n = step.samples.size();
  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 1.0 - textdist::decision_distance(
                           step.samples[i].action_text,
                           step.samples[j].action_text);
      sim[i][j] = s;
      sim[j][i] = s;
    }
  }
  return sim;
}

void require_samples(const StepRecord& step, std::size_t min_n,
                     const char* method) {
  if (step.samples.size() < min_n) {
    throw InputError(std::string(method) + ": needs at least " +
                     std::to_string(min_n) + " samples, got " +
                     std::to_string(step.samples.size()));
  }
}

double step_ppl(const StepRecord& step) {
  double acc = 0.0;
  for (const auto& s : step.samples) {
    acc += std::exp(-s.seq_logprob / static_cast<double>(s.token_count));
  }
  return acc / static_cast<double>(step.samples.size());
}

double step_pe(const StepRecord& step) {
  double acc = 0.0;
  for (const auto& s : step.samples) acc += s.seq_logprob;
  return -acc / static_cast<double>(step.samples.size());
}

double step_ls(const StepRecord& step) {
  auto sim = similarity_matrix(step);
  const std::size_t n = step.samples.size();
  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      acc += sim[i][j];
      ++pairs;
    }
  }
  return 1.0 - acc / static_cast<double>(pairs);
}

double step_se(const StepRecord& step, double sim_threshold) {
  ClusterPartition part = cluster_samples(step, sim_threshold);
  double acc = 0.0;
  for (const auto& cluster : part.clusters) {
    // Cluster probability in log space: ln sum_n exp(seq_logprob_n),
    // clamped into (0, 1] (the sum of true sequence probabilities cannot
    // exceed 1; sampled duplicates can push the estimate past it).
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t n : cluster) m = std::max(m, step.samples[n].seq_logprob);
    double s = 0.0;
    for (std::size_t n : cluster) s += std::exp(step.samples[n].seq_logprob - m);
    double log_p = std::min(m + std::log(s), 0.0);
    acc += log_p;
  }
  return -acc / static_cast<double>(part.clusters.size());
}

double step_deg(const StepRecord& step) {
  auto sim = similarity_matrix(step);
  const std::size_t n = step.samples.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) acc += sim[i][j];
  }
  return 1.0 - acc / static_cast<double>(n * n);
}

double step_sd(const StepRecord& step) {
  const std::string& chosen = step.chosen().action_text;
  // Weights are exp(seq_logprob - max) so the ratio survives underflow.
  double max_lp = -std::numeric_limits<double>::infinity();
  for (const auto& s : step.samples) max_lp = std::max(max_lp, s.seq_logprob);
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : step.samples) {
    double w = std::exp(s.seq_logprob - max_lp);
    double d = textdist::decision_distance(s.action_text, chosen);
    num += w * textdist::gaussian_kernel(d, 1);
    den += w;
  }
  return 1.0 - num / den;
}

double step_sentsar(const StepRecord& step) {
  auto sim = similarity_matrix(step);
  const std::size_t n = step.samples.size();
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(step.samples[i].seq_logprob);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double shifted = p[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) shifted += p[j] * sim[i][j];
    }
    acc += std::log(shifted);
  }
  return std::max(-acc / static_cast<double>(n), 0.0);
}

}  // namespace

ClusterPartition cluster_samples(const StepRecord& step,
                                 double sim_threshold) {
  ClusterPartition part;
  double max_dist = 1.0 - sim_threshold;
  for (std::size_t n = 0; n < step.samples.size(); ++n) {
    bool placed = false;
    for (auto& cluster : part.clusters) {
      const std::string& rep = step.samples[cluster.front()].action_text;
      if (textdist::decision_distance(step.samples[n].action_text, rep) <=
          max_dist) {
        cluster.push_back(n);
        placed = true;
        break;
      }
    }
    if (!placed) part.clusters.push_back({n});
  }
  return part;
}

double baseline_step(Method method, const StepRecord& step,
                     double sim_threshold) {
  switch (method) {
    case Method::kPpl:
      require_samples(step, 1, "ppl");
      return step_ppl(step);
    case Method::kPe:
      require_samples(step, 1, "pe");
      return step_pe(step);
    case Method::kSe:
      require_samples(step, 1, "se");
      return step_se(step, sim_threshold);
    case Method::kLs:
      require_samples(step, 2, "ls");
      return step_ls(step);
    case Method::kDeg:
      require_samples(step, 2, "deg");
      return step_deg(step);
    case Method::kSd:
      require_samples(step, 2, "sd");
      return step_sd(step);
    case Method::kSentSar:
      require_samples(step, 2, "sentsar");
      return step_sentsar(step);
  }
  throw InputError("baseline_step: unknown method");
}

double aggregate_tdp(std::span<const double> per_step, Aggregation mode) {
  if (per_step.empty()) {
    throw InputError("aggregate_tdp: empty per-step list");
  }
  double acc = 0.0;
  for (double v : per_step) {
    acc += mode == Aggregation::kAvg ? v : v * v;
  }
  acc /= static_cast<double>(per_step.size());
  return mode == Aggregation::kAvg ? acc : std::sqrt(acc);
}

double baseline_task(const TaskRecord& task, Method method, Aggregation agg,
                     double sim_threshold) {
  if (task.tdps.empty()) {
    throw InputError("baseline_task: task has no TDPs");
  }
  double acc = 0.0;
  for (const TdpRecord& tdp : task.tdps) {
    std::vector<double> per_step;
    per_step.reserve(tdp.steps.size());
    for (const StepRecord& step : tdp.steps) {
      per_step.push_back(baseline_step(method, step, sim_threshold));
    }
    acc += aggregate_tdp(per_step, agg);
  }
  return acc / static_cast<double>(task.tdps.size());
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kPpl: return "ppl";
    case Method::kLs: return "ls";
    case Method::kPe: return "pe";
    case Method::kSe: return "se";
    case Method::kDeg: return "deg";
    case Method::kSd: return "sd";
    case Method::kSentSar: return "sentsar";
  }
  return "?";
}

const char* aggregation_name(Aggregation a) {
  return a == Aggregation::kAvg ? "avg" : "rms";
}

bool parse_method(const std::string& name, Method& out) {
  for (Method m : {Method::kPpl, Method::kLs, Method::kPe, Method::kSe,
                   Method::kDeg, Method::kSd, Method::kSentSar}) {
    if (name == method_name(m)) {
      out = m;
      return true;
    }
  }
  return false;
}

bool parse_aggregation(const std::string& name, Aggregation& out) {
  if (name == "avg") {
    out = Aggregation::kAvg;
    return true;
  }
  if (name == "rms") {
    out = Aggregation::kRms;
    return true;
  }
  return false;
}

}  // namespace uprop::baselines
