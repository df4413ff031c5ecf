#include "uprop/oracle.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "uprop/io_util.hpp"

namespace uprop::oracle {

using nlohmann::json;

namespace {

constexpr double kProbSumTolerance = 1e-12;

double entropy_of(std::span<const double> p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
      kl += p[i] * std::log(p[i] / q[i]);
    }
  }
  return kl;
}

const std::vector<double>& lookup(const ProcessTable& table,
                                  const std::string& key) {
  auto it = table.conditionals.find(key);
  if (it == table.conditionals.end()) {
    throw ValidationError("conditionals[\"" + key + "\"]",
                          "missing history entry");
  }
  return it->second;
}

void append_key(std::string& key, const std::string& action) {
  if (!key.empty()) key += '|';
  key += action;
}

// Walks every history for steps [1, depth], calling fn(key, p_history) in
// lexicographic (index) order. depth == 0 visits just the empty history.
template <typename Fn>
void for_each_history(const ProcessTable& table, int depth, Fn&& fn) {
  struct Frame {
    std::string key;
    double prob;
    int step;  // 0-based step whose decision comes next
  };
  std::vector<Frame> stack;
  stack.push_back({std::string(), 1.0, 0});
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.step == depth) {
      fn(f.key, f.prob);
      continue;
    }
    const std::vector<double>& cond = lookup(table, f.key);
    const auto& alphabet = table.alphabets[f.step];
    // Push in reverse so histories pop in index order.
    for (std::size_t a = alphabet.size(); a-- > 0;) {
      Frame next;
      next.key = f.key;
      append_key(next.key, alphabet[a]);
      next.prob = f.prob * cond[a];
      next.step = f.step + 1;
      stack.push_back(std::move(next));
    }
  }
}

}  // namespace

std::string history_key(std::span<const std::string> history) {
  std::string key;
  for (const auto& a : history) append_key(key, a);
  return key;
}

std::string history_observation(int next_step,
                                std::span<const std::string> history) {
  std::string obs = "step=" + std::to_string(next_step);
  if (!history.empty()) {
    obs += " history=";
    obs += history_key(history);
  }
  return obs;
}

std::uint64_t trajectory_count(const ProcessTable& table) {
  std::uint64_t count = 1;
  for (const auto& alphabet : table.alphabets) {
    count *= alphabet.size();
    if (count > kMaxEnumeration) {
      throw SizeError("trajectory space exceeds the enumeration bound of " +
                      std::to_string(kMaxEnumeration));
    }
  }
  return count;
}

void validate_table(const ProcessTable& table) {
  if (table.horizon < 1) {
    throw ValidationError("horizon", "must be >= 1");
  }
  if (static_cast<int>(table.alphabets.size()) != table.horizon) {
    throw ValidationError("alphabets",
                          "must have exactly one list per step");
  }
  for (std::size_t t = 0; t < table.alphabets.size(); ++t) {
    const auto& alphabet = table.alphabets[t];
    std::string path = "alphabets[" + std::to_string(t) + "]";
    if (alphabet.empty() || alphabet.size() > 6) {
      throw ValidationError(path, "must hold between 1 and 6 actions");
    }
    std::set<std::string> seen;
    for (const auto& action : alphabet) {
      if (action.find('|') != std::string::npos) {
        throw ValidationError(path, "actions must not contain '|'");
      }
      if (!seen.insert(action).second) {
        throw ValidationError(path, "duplicate action \"" + action + "\"");
      }
    }
  }
  trajectory_count(table);  // enforces the enumeration bound

  std::uint64_t expected_keys = 0;
  std::uint64_t histories = 1;
  for (int t = 0; t < table.horizon; ++t) {
    expected_keys += histories;
    histories *= table.alphabets[t].size();
  }
  if (table.conditionals.size() != expected_keys) {
    throw ValidationError("conditionals",
                          "expected " + std::to_string(expected_keys) +
                              " history entries, found " +
                              std::to_string(table.conditionals.size()));
  }
  for (int t = 0; t < table.horizon; ++t) {
    const std::size_t width = table.alphabets[t].size();
    for_each_history(table, t, [&](const std::string& key, double) {
      const std::vector<double>& cond = lookup(table, key);
      if (cond.size() != width) {
        throw ValidationError("conditionals[\"" + key + "\"]",
                              "probability vector has the wrong length");
      }
      double sum = 0.0;
      for (double p : cond) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw ValidationError("conditionals[\"" + key + "\"]",
                                "probabilities must be finite and >= 0");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kProbSumTolerance) {
        throw ValidationError("conditionals[\"" + key + "\"]",
                              "probabilities must sum to 1 within 1e-12");
      }
    });
  }
}

double exact_total_entropy_serial(const ProcessTable& table) {
  trajectory_count(table);
  double h = 0.0;
  for_each_history(table, table.horizon, [&](const std::string&, double p) {
    if (p > 0.0) h -= p * std::log(p);
  });
  return h;
}

namespace {

// Entropy contribution of all trajectories extending one history prefix,
// by depth-first walk (shared prefix work, one lookup per node).
double entropy_below(const ProcessTable& table, const std::string& prefix_key,
                     double prefix_prob, int step) {
  if (step == table.horizon) {
    return prefix_prob > 0.0 ? -prefix_prob * std::log(prefix_prob) : 0.0;
  }
  const std::vector<double>& cond = lookup(table, prefix_key);
  const auto& alphabet = table.alphabets[step];
  double h = 0.0;
  for (std::size_t a = 0; a < alphabet.size(); ++a) {
    double p = prefix_prob * cond[a];
    if (p == 0.0) continue;
    std::string key = prefix_key;
    append_key(key, alphabet[a]);
    h += entropy_below(table, key, p, step + 1);
  }
  return h;
}

}  // namespace

double exact_total_entropy(const ProcessTable& table) {
  trajectory_count(table);

  // Fan out over history prefixes until there are enough independent
  // blocks to keep every thread busy, then walk each block serially.
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  int depth = 0;
  std::uint64_t blocks = 1;
  while (depth < table.horizon &&
         blocks < static_cast<std::uint64_t>(threads) * 8) {
    blocks *= table.alphabets[depth].size();
    ++depth;
  }

  struct Prefix {
    std::string key;
    double prob;
  };
  std::vector<Prefix> prefixes;
  prefixes.reserve(blocks);
  for_each_history(table, depth, [&](const std::string& key, double p) {
    prefixes.push_back({key, p});
  });

  double h = 0.0;
#pragma omp parallel for reduction(+ : h) schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(prefixes.size());
       ++i) {
    h += entropy_below(table, prefixes[i].key, prefixes[i].prob, depth);
  }
  return h;
}

std::vector<std::vector<double>> exact_step_marginals(
    const ProcessTable& table) {
  trajectory_count(table);
  std::vector<std::vector<double>> marginals(table.horizon);
  for (int t = 0; t < table.horizon; ++t) {
    std::vector<double> marg(table.alphabets[t].size(), 0.0);
    for_each_history(table, t, [&](const std::string& key, double ph) {
      const std::vector<double>& cond = lookup(table, key);
      for (std::size_t a = 0; a < cond.size(); ++a) marg[a] += ph * cond[a];
    });
    marginals[t] = std::move(marg);
  }
  return marginals;
}

EntropyDecomposition exact_entropy_decomposition(const ProcessTable& table,
                                                 int t) {
  if (t < 1 || t > table.horizon) {
    throw InputError("exact_entropy_decomposition: step index out of range");
  }
  trajectory_count(table);
  std::vector<double> marg(table.alphabets[t - 1].size(), 0.0);
  double conditional = 0.0;
  for_each_history(table, t - 1, [&](const std::string& key, double ph) {
    const std::vector<double>& cond = lookup(table, key);
    for (std::size_t a = 0; a < cond.size(); ++a) marg[a] += ph * cond[a];
    conditional += ph * entropy_of(cond);
  });
  EntropyDecomposition d;
  d.marginal_entropy = entropy_of(marg);
  d.conditional_entropy = conditional;
  d.mi_sum = d.marginal_entropy - d.conditional_entropy;
  return d;
}

double exact_pmi(const ProcessTable& table, int t,
                 std::span<const std::string> history) {
  if (t < 1 || t > table.horizon) {
    throw InputError("exact_pmi: step index out of range");
  }
  if (static_cast<int>(history.size()) != t - 1) {
    throw InputError("exact_pmi: history must have length t - 1");
  }
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& alphabet = table.alphabets[i];
    if (std::find(alphabet.begin(), alphabet.end(), history[i]) ==
        alphabet.end()) {
      throw InputError("exact_pmi: history action \"" + history[i] +
                       "\" is not in step " + std::to_string(i + 1) +
                       "'s alphabet");
    }
  }
  const std::vector<double>& cond = lookup(table, history_key(history));

  std::vector<double> marg(table.alphabets[t - 1].size(), 0.0);
  for_each_history(table, t - 1, [&](const std::string& key, double ph) {
    const std::vector<double>& c = lookup(table, key);
    for (std::size_t a = 0; a < c.size(); ++a) marg[a] += ph * c[a];
  });
  return kl_divergence(cond, marg);
}

TdpRecord sample_tdp_exact(const ProcessTable& table, int n_samples,
                           Rng& rng) {
  if (n_samples < 2) {
    throw InputError("sample_tdp_exact: N must be >= 2");
  }
  TdpRecord tdp;
  std::vector<std::string> history;
  for (int t = 0; t < table.horizon; ++t) {
    const std::vector<double>& cond = lookup(table, history_key(history));
    const auto& alphabet = table.alphabets[t];
    StepRecord step;
    step.samples.reserve(n_samples);
    for (int n = 0; n < n_samples; ++n) {
      std::size_t idx = rng.categorical(cond);
      Decision d;
      d.action_text = alphabet[idx];
      d.full_text = alphabet[idx];
      double lp = std::log(cond[idx]);
      d.token_logprobs = {lp};
      d.seq_logprob = lp;
      d.token_count = 1;
      step.samples.push_back(std::move(d));
    }
    step.chosen_index = static_cast<int>(rng.uniform_index(n_samples));
    history.push_back(step.samples[step.chosen_index].action_text);
    step.observation = history_observation(t + 2, history);
    tdp.steps.push_back(std::move(step));
  }
  tdp.terminated = true;
  tdp.final_answer = history.back();
  return tdp;
}

namespace {

// Exact-path total for one sampled TDP: at each step, the table's
// conditional entropy at the realized history plus the accumulated exact
// PMI of the preceding steps (step i's PMI is the KL between its realized
// conditional and its marginal, mirroring the kernel path's step-level
// reading; the first step's term is identically 0).
double exact_path_total(const ProcessTable& table, const TdpRecord& tdp,
                        const std::vector<std::vector<double>>& marginals) {
  std::string key;
  double total = 0.0;
  double cumulative_pmi = 0.0;
  for (int t = 0; t < table.horizon; ++t) {
    const std::vector<double>& cond = lookup(table, key);
    total += entropy_of(cond) + cumulative_pmi;
    cumulative_pmi += kl_divergence(cond, marginals[t]);
    append_key(key, tdp.steps[t].chosen().action_text);
  }
  return total;
}

template <bool kParallel>
TdpTotals per_tdp_totals_impl(const ProcessTable& table, int z_count,
                              int n_samples, std::uint64_t seed,
                              estimators::PmiMode pmi_mode) {
  if (z_count < 1) throw InputError("per_tdp_totals: Z must be >= 1");
  validate_table(table);
  const auto marginals = exact_step_marginals(table);
  const estimators::EpsilonPolicy eps;

  TdpTotals totals;
  totals.exact_path.resize(z_count);
  totals.kernel_path.resize(z_count);

#pragma omp parallel for schedule(static) if (kParallel)
  for (int z = 0; z < z_count; ++z) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(z)));
    TdpRecord tdp = sample_tdp_exact(table, n_samples, rng);
    totals.exact_path[z] = exact_path_total(table, tdp, marginals);
    totals.kernel_path[z] =
        estimators::score_tdp(tdp, estimators::IntrinsicMode::kPe, pmi_mode,
                              eps)
            .tdp_total_raw;
  }
  return totals;
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanStderr mean_stderr(std::span<const double> values) {
  MeanStderr r;
  const double n = static_cast<double>(values.size());
  for (double v : values) r.mean += v;
  r.mean /= n;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  return r;
}

double relative_error(double estimate, double truth) {
  if (truth == 0.0) return std::abs(estimate);
  return std::abs(estimate - truth) / std::abs(truth);
}

}  // namespace

TdpTotals per_tdp_totals(const ProcessTable& table, int z_count, int n_samples,
                         std::uint64_t seed, estimators::PmiMode pmi_mode) {
  return per_tdp_totals_impl<true>(table, z_count, n_samples, seed, pmi_mode);
}

TdpTotals per_tdp_totals_serial(const ProcessTable& table, int z_count,
                                int n_samples, std::uint64_t seed,
                                estimators::PmiMode pmi_mode) {
  return per_tdp_totals_impl<false>(table, z_count, n_samples, seed, pmi_mode);
}

ConvergenceReport convergence_experiment(const ProcessTable& table,
                                         std::span<const int> z_grid,
                                         int n_samples, std::uint64_t seed,
                                         estimators::PmiMode pmi_mode) {
  if (z_grid.empty()) {
    throw InputError("convergence_experiment: empty Z grid");
  }
  int z_max = *std::max_element(z_grid.begin(), z_grid.end());
  TdpTotals totals = per_tdp_totals(table, z_max, n_samples, seed, pmi_mode);

  ConvergenceReport report;
  report.exact_entropy = exact_total_entropy(table);
  for (int z : z_grid) {
    if (z < 1) throw InputError("convergence_experiment: Z must be >= 1");
    ConvergencePoint pt;
    pt.z = z;
    auto exact = mean_stderr({totals.exact_path.data(),
                              static_cast<std::size_t>(z)});
    auto kernel = mean_stderr({totals.kernel_path.data(),
                               static_cast<std::size_t>(z)});
    pt.exact_mean = exact.mean;
    pt.exact_stderr = exact.stderr_;
    pt.exact_rel_error = relative_error(exact.mean, report.exact_entropy);
    pt.kernel_mean = kernel.mean;
    pt.kernel_stderr = kernel.stderr_;
    pt.kernel_rel_error = relative_error(kernel.mean, report.exact_entropy);
    report.points.push_back(pt);
  }
  return report;
}

ProcessTable parse_table_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed table JSON: ") + e.what(),
                     static_cast<long long>(e.byte));
  }
  if (!j.is_object() || !j.contains("horizon") || !j.contains("alphabets") ||
      !j.contains("conditionals")) {
    throw ValidationError(
        "table", "expected fields horizon, alphabets, conditionals");
  }
  ProcessTable table;
  try {
    table.horizon = j["horizon"].get<int>();
    table.alphabets = j["alphabets"].get<std::vector<std::vector<std::string>>>();
    for (auto it = j["conditionals"].begin(); it != j["conditionals"].end();
         ++it) {
      table.conditionals[it.key()] = it.value().get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw ValidationError("table", std::string("bad field type: ") + e.what());
  }
  validate_table(table);
  return table;
}

std::string table_to_json(const ProcessTable& table) {
  json cond = json::object();
  for (const auto& [key, probs] : table.conditionals) cond[key] = probs;
  json j{{"horizon", table.horizon},
         {"alphabets", table.alphabets},
         {"conditionals", std::move(cond)}};
  return j.dump();
}

ProcessTable load_table(const std::string& path) {
  return parse_table_json(read_file(path));
}

}  // namespace uprop::oracle
