#include "uprop/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "uprop/textdist.hpp"

namespace uprop::estimators {

namespace {

double logsumexp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> distances_to_chosen(const StepRecord& step) {
  const std::string& chosen = step.chosen().action_text;
  std::vector<double> d;
  d.reserve(step.samples.size());
  for (const auto& s : step.samples) {
    d.push_back(textdist::decision_distance(s.action_text, chosen));
  }
  return d;
}

}  // namespace

double intrinsic_entropy(const StepRecord& step, IntrinsicMode mode) {
  if (step.samples.empty()) {
    throw InputError("intrinsic_entropy: step has no samples");
  }
  double acc = 0.0;
  for (const auto& s : step.samples) {
    if (mode == IntrinsicMode::kPe) {
      acc += s.seq_logprob;
    } else {
      acc += s.seq_logprob / static_cast<double>(s.token_count);
    }
  }
  double h = -acc / static_cast<double>(step.samples.size());
  return std::max(h, 0.0);  // floating error only; logprobs are <= 0
}

double pmi_from_distances(std::span<const double> distances, int tau,
                          PmiMode mode) {
  if (distances.size() < 2) {
    throw InputError(
        "pmi: extrinsic uncertainty undefined for a single sample");
  }
  const double n = static_cast<double>(distances.size());
  std::vector<double> terms;
  terms.reserve(distances.size());
  if (mode == PmiMode::kFaithful) {
    for (double d : distances) {
      terms.push_back(textdist::log_gaussian_kernel(d, tau));
    }
    return -logsumexp(terms);
  }
  for (double d : distances) {
    terms.push_back(-0.5 * static_cast<double>(tau) * d * d);
  }
  return -logsumexp(terms) + std::log(n);
}

double pmi_step(const StepRecord& step, int tau, PmiMode mode) {
  if (step.samples.size() < 2) {
    throw InputError(
        "pmi_step: extrinsic uncertainty undefined for a single sample");
  }
  std::vector<double> d = distances_to_chosen(step);
  return pmi_from_distances(d, tau, mode);
}

ScoreBreakdown assemble_breakdown(std::vector<double> per_step_iu,
                                  std::vector<double> per_step_eu,
                                  const EpsilonPolicy& eps) {
  if (per_step_iu.empty() || per_step_iu.size() != per_step_eu.size()) {
    throw InputError("assemble_breakdown: IU/EU vectors empty or mismatched");
  }
  ScoreBreakdown b;
  b.per_step_iu = std::move(per_step_iu);
  b.per_step_eu = std::move(per_step_eu);
  const std::size_t n = b.per_step_iu.size();
  b.sigma.resize(n);
  b.iu_fraction.resize(n);
  b.eu_fraction.resize(n);
  double lambda = 0.0;
  double raw = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double iu = b.per_step_iu[t];
    double eu = b.per_step_eu[t];
    b.sigma[t] = 1.0 + eu / std::max(iu, eps.iu_floor);
    lambda += b.sigma[t];
    raw += iu + eu;
    double denom = iu + eu;
    b.iu_fraction[t] = denom == 0.0 ? 1.0 : iu / denom;
    b.eu_fraction[t] = 1.0 - b.iu_fraction[t];
  }
  b.lambda = lambda;
  b.tdp_total_raw = raw;
  b.tdp_total_normalized = raw / lambda;
  return b;
}

ScoreBreakdown score_tdp(const TdpRecord& tdp, IntrinsicMode intrinsic,
                         PmiMode pmi, const EpsilonPolicy& eps) {
  if (tdp.steps.empty()) {
    throw InputError("score_tdp: TDP has no steps");
  }
  const std::size_t n = tdp.steps.size();
  std::vector<double> iu(n);
  std::vector<double> eu(n);
  for (std::size_t t = 0; t < n; ++t) {
    iu[t] = intrinsic_entropy(tdp.steps[t], intrinsic);
  }
  // EU is cumulative: step t inherits the kernel PMI of every preceding
  // step, each evaluated on that step's own sample set.
  eu[0] = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    const StepRecord& prev = tdp.steps[t - 1];
    int tau = static_cast<int>(prev.samples.size());
    eu[t] = eu[t - 1] + pmi_step(prev, tau, pmi);
  }
  return assemble_breakdown(std::move(iu), std::move(eu), eps);
}

UPropResult uprop_score(const TaskRecord& task, double match_threshold,
                        IntrinsicMode intrinsic, PmiMode pmi,
                        const EpsilonPolicy& eps) {
  if (task.tdps.empty()) {
    throw InputError("uprop_score: task has no TDPs");
  }
  UPropResult r;
  r.breakdowns.reserve(task.tdps.size());
  r.matched.resize(task.tdps.size(), false);
  for (std::size_t z = 0; z < task.tdps.size(); ++z) {
    const TdpRecord& tdp = task.tdps[z];
    r.breakdowns.push_back(score_tdp(tdp, intrinsic, pmi, eps));
    if (task.greedy_answer && tdp.final_answer) {
      double d = textdist::decision_distance(*tdp.final_answer,
                                             *task.greedy_answer);
      r.matched[z] = d <= match_threshold;
    }
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t z = 0; z < task.tdps.size(); ++z) {
    if (r.matched[z]) {
      sum += r.breakdowns[z].tdp_total_normalized;
      ++count;
    }
  }
  if (count == 0) {
    r.fallback = true;
    for (const auto& b : r.breakdowns) sum += b.tdp_total_normalized;
    count = r.breakdowns.size();
  }
  r.score = sum / static_cast<double>(count);
  return r;
}

StepFractionSeries iu_eu_fractions(std::span<const TaskRecord> tasks,
                                   IntrinsicMode intrinsic, PmiMode pmi,
                                   const EpsilonPolicy& eps) {
  StepFractionSeries out;
  for (const TaskRecord& task : tasks) {
    for (const TdpRecord& tdp : task.tdps) {
      ScoreBreakdown b = score_tdp(tdp, intrinsic, pmi, eps);
      if (b.iu_fraction.size() > out.iu_mean.size()) {
        out.iu_mean.resize(b.iu_fraction.size(), 0.0);
        out.eu_mean.resize(b.iu_fraction.size(), 0.0);
        out.tdp_count.resize(b.iu_fraction.size(), 0);
      }
      for (std::size_t t = 0; t < b.iu_fraction.size(); ++t) {
        out.iu_mean[t] += b.iu_fraction[t];
        out.eu_mean[t] += b.eu_fraction[t];
        out.tdp_count[t] += 1;
      }
    }
  }
  for (std::size_t t = 0; t < out.iu_mean.size(); ++t) {
    out.iu_mean[t] /= static_cast<double>(out.tdp_count[t]);
    out.eu_mean[t] /= static_cast<double>(out.tdp_count[t]);
  }
  return out;
}

}  // namespace uprop::estimators
