#pragma once

// Shared test fixtures: record builders, independent reference
// implementations (kept free of the production code paths they check), and
// random generators for property tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "uprop/metrics.hpp"
#include "uprop/model.hpp"
#include "uprop/oracle.hpp"
#include "uprop/rng.hpp"

namespace uprop::testsupport {

// --- record builders --------------------------------------------------------

inline Decision make_decision(std::string action, double seq_logprob,
                              int token_count = 1) {
  Decision d;
  d.action_text = action;
  d.full_text = std::move(action);
  d.token_count = token_count;
  d.token_logprobs.assign(token_count, seq_logprob / token_count);
  d.seq_logprob = 0.0;
  for (double lp : d.token_logprobs) d.seq_logprob += lp;
  return d;
}

inline StepRecord make_step(std::vector<Decision> samples, int chosen,
                            std::string observation = "obs") {
  StepRecord s;
  s.samples = std::move(samples);
  s.chosen_index = chosen;
  s.observation = std::move(observation);
  return s;
}

inline TdpRecord make_tdp(std::vector<StepRecord> steps,
                          std::string final_answer = "done") {
  TdpRecord t;
  t.steps = std::move(steps);
  t.terminated = true;
  t.final_answer = std::move(final_answer);
  return t;
}

// --- worked process-table fixture --------------------------------------------
// T = 2; y1 uniform over {a, b}; y2|a = (0.9, 0.1); y2|b = (0.5, 0.5).
// Exact H(P) = ln 2 + 0.5 H(0.9, 0.1) + 0.5 H(0.5, 0.5) = 1.20226...

inline oracle::ProcessTable worked_table() {
  oracle::ProcessTable t;
  t.horizon = 2;
  t.alphabets = {{"a", "b"}, {"x", "y"}};
  t.conditionals[""] = {0.5, 0.5};
  t.conditionals["a"] = {0.9, 0.1};
  t.conditionals["b"] = {0.5, 0.5};
  return t;
}

inline double worked_table_entropy() {
  auto h2 = [](double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); };
  return std::log(2.0) + 0.5 * h2(0.9) + 0.5 * h2(0.5);
}

// --- independent reference implementations ------------------------------------

// Full-matrix edit distance over bytes; independent of the production
// two-row Unicode implementation (equal on ASCII inputs).
inline std::size_t levenshtein_reference(const std::string& a,
                                         const std::string& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::vector<std::size_t>> dp(n + 1,
                                           std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) dp[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) dp[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = dp[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      dp[i][j] = std::min({dp[i - 1][j] + 1, dp[i][j - 1] + 1, sub});
    }
  }
  return dp[n][m];
}

// Pairwise Mann-Whitney statistic, ties counted 0.5.
inline double auroc_reference(std::span<const metrics::LabeledScore> items) {
  double hits = 0.0;
  std::size_t pairs = 0;
  for (const auto& c : items) {
    if (!c.correct) continue;
    for (const auto& w : items) {
      if (w.correct) continue;
      ++pairs;
      if (c.uncertainty < w.uncertainty) {
        hits += 1.0;
      } else if (c.uncertainty == w.uncertainty) {
        hits += 0.5;
      }
    }
  }
  return hits / static_cast<double>(pairs);
}

inline std::vector<double> ranks_with_ties(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>((i + 1) + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
  std::vector<double> ra = ranks_with_ties(a);
  std::vector<double> rb = ranks_with_ties(b);
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= ra.size();
  mb /= rb.size();
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

// --- random generators -----------------------------------------------------------

inline std::string random_action(Rng& rng) {
  static const char* kPool[] = {"Search[High Plains]", "Search[Colorado]",
                                "Lookup[eastern sector]", "Finish[1,800 ft]",
                                "answer(220)", "ls /etc", "ls /usr",
                                "bash:ls -1 | wc -l", "echo done", ""};
  std::string base = kPool[rng.uniform_index(10)];
  if (rng.uniform() < 0.3) {
    base += " #" + std::to_string(rng.uniform_index(1000));
  }
  return base;
}

inline Decision random_decision(Rng& rng) {
  int tokens = 1 + static_cast<int>(rng.uniform_index(6));
  Decision d;
  d.action_text = random_action(rng);
  d.full_text = "Think: step.\n\nAct: " + d.action_text;
  d.token_count = tokens;
  d.seq_logprob = 0.0;
  for (int i = 0; i < tokens; ++i) {
    double lp = -3.0 * rng.uniform();
    d.token_logprobs.push_back(lp);
    d.seq_logprob += lp;
  }
  return d;
}

inline TaskRecord random_task(Rng& rng) {
  TaskRecord task;
  task.task_id = "task-" + std::to_string(rng.uniform_index(100000));
  task.instruction = "count the files in /etc #" +
                     std::to_string(rng.uniform_index(1000));
  task.model_ref = "mock-model";
  task.gen_config.seed = static_cast<int64_t>(rng.uniform_index(1 << 30));
  if (rng.uniform() < 0.7) {
    task.greedy_answer = random_action(rng);
    task.correct = rng.uniform() < 0.5;
  }
  int z = 1 + static_cast<int>(rng.uniform_index(4));
  for (int zi = 0; zi < z; ++zi) {
    TdpRecord tdp;
    int steps = 1 + static_cast<int>(rng.uniform_index(4));
    for (int t = 0; t < steps; ++t) {
      int n = 2 + static_cast<int>(rng.uniform_index(4));
      StepRecord step;
      for (int i = 0; i < n; ++i) step.samples.push_back(random_decision(rng));
      step.chosen_index = static_cast<int>(rng.uniform_index(n));
      step.observation = "The output of the OS:\n" +
                         std::to_string(rng.uniform_index(1000));
      tdp.steps.push_back(std::move(step));
    }
    if (rng.uniform() < 0.8) {
      tdp.terminated = true;
      tdp.final_answer = random_action(rng);
    } else {
      tdp.truncated = true;
    }
    task.tdps.push_back(std::move(tdp));
  }
  return task;
}

// Random enumerable table, T <= max_horizon, alphabets <= max_actions.
inline oracle::ProcessTable random_table(Rng& rng, int max_horizon = 3,
                                         int max_actions = 4) {
  oracle::ProcessTable table;
  table.horizon = 1 + static_cast<int>(rng.uniform_index(max_horizon));
  for (int t = 0; t < table.horizon; ++t) {
    int size = 2 + static_cast<int>(rng.uniform_index(max_actions - 1));
    std::vector<std::string> alphabet;
    for (int a = 0; a < size; ++a) {
      alphabet.push_back("s" + std::to_string(t) + "a" + std::to_string(a));
    }
    table.alphabets.push_back(std::move(alphabet));
  }
  // Fill every history's conditional with a random simplex point,
  // occasionally sparse.
  std::vector<std::string> history;
  std::function<void(int)> fill = [&](int t) {
    std::vector<double> probs(table.alphabets[t].size());
    double total = 0.0;
    for (double& p : probs) {
      p = rng.uniform() < 0.2 ? 0.0 : rng.uniform() + 1e-3;
      total += p;
    }
    if (total == 0.0) {
      probs[rng.uniform_index(probs.size())] = 1.0;
      total = 1.0;
    }
    for (double& p : probs) p /= total;
    // Renormalize exactly: make the largest entry absorb the residual.
    double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
    auto largest = std::max_element(probs.begin(), probs.end());
    *largest += 1.0 - sum;
    table.conditionals[oracle::history_key(history)] = probs;
    if (t + 1 < table.horizon) {
      for (const std::string& action : table.alphabets[t]) {
        history.push_back(action);
        fill(t + 1);
        history.pop_back();
      }
    }
  };
  fill(0);
  return table;
}

// Smooth-by-construction family for the kernel-vs-exact comparison: step-1
// actions embed in string space so that close strings have close step-2
// conditionals, and the family index moves probability mass onto the far
// action, raising both the step-1 spread and the true step-2 MI.
inline oracle::ProcessTable smooth_family_member(int index, int family_size) {
  double pi = 0.025 + 0.45 * static_cast<double>(index) /
                          static_cast<double>(family_size - 1);
  oracle::ProcessTable t;
  t.horizon = 2;
  t.alphabets = {{"aaaa", "aaab", "bbbb"}, {"x", "y"}};
  double near = (1.0 - pi) / 2.0;
  t.conditionals[""] = {near, near, 1.0 - 2.0 * near};
  t.conditionals["aaaa"] = {0.9, 0.1};
  t.conditionals["aaab"] = {0.85, 0.15};
  t.conditionals["bbbb"] = {0.1, 0.9};
  return t;
}

}  // namespace uprop::testsupport
