#include "uprop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace uprop::metrics {

namespace {

void require_finite(std::span<const LabeledScore> items, const char* op) {
  if (items.empty()) {
    throw InputError(std::string(op) + ": empty input");
  }
  for (const auto& it : items) {
    if (!std::isfinite(it.uncertainty)) {
      throw InputError(std::string(op) + ": non-finite uncertainty");
    }
  }
}

// Indices sorted ascending by uncertainty, input order preserved on ties.
std::vector<std::size_t> ascending_order(std::span<const LabeledScore> items) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return items[a].uncertainty < items[b].uncertainty;
                   });
  return order;
}

}  // namespace

double auroc(std::span<const LabeledScore> items) {
  require_finite(items, "auroc");
  std::size_t n_correct = 0;
  for (const auto& it : items) n_correct += it.correct ? 1 : 0;
  std::size_t n_incorrect = items.size() - n_correct;
  if (n_correct == 0 || n_incorrect == 0) {
    throw InputError("auroc: undefined for single-class input");
  }

  // Rank-sum form with average ranks on ties; equals the pairwise
  // Mann-Whitney count exactly (both numerators are multiples of 0.5).
  std::vector<std::size_t> order = ascending_order(items);
  double rank_sum_incorrect = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() &&
           items[order[j]].uncertainty == items[order[i]].uncertainty) {
      ++j;
    }
    double avg_rank = 0.5 * static_cast<double>((i + 1) + j);  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (!items[order[k]].correct) rank_sum_incorrect += avg_rank;
    }
    i = j;
  }
  double n_inc = static_cast<double>(n_incorrect);
  double u = rank_sum_incorrect - n_inc * (n_inc + 1.0) / 2.0;
  return u / (static_cast<double>(n_correct) * n_inc);
}

double auarc(std::span<const LabeledScore> items) {
  require_finite(items, "auarc");
  std::vector<std::size_t> order = ascending_order(items);
  const std::size_t n = items.size();
  std::vector<double> correct_prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    correct_prefix[i + 1] =
        correct_prefix[i] + (items[order[i]].correct ? 1.0 : 0.0);
  }
  double acc_sum = 0.0;
  for (std::size_t rejected = 0; rejected < n; ++rejected) {
    std::size_t kept = n - rejected;
    acc_sum += correct_prefix[kept] / static_cast<double>(kept);
  }
  return acc_sum / static_cast<double>(n);
}

std::size_t select_min_uncertainty(std::span<const LabeledScore> candidates) {
  require_finite(candidates, "select_min_uncertainty");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].uncertainty < candidates[best].uncertainty) best = i;
  }
  return best;
}

double success_rate(std::span<const LabeledScore> items) {
  if (items.empty()) {
    throw InputError("success_rate: empty input");
  }
  std::size_t n_correct = 0;
  for (const auto& it : items) n_correct += it.correct ? 1 : 0;
  return static_cast<double>(n_correct) / static_cast<double>(items.size());
}

}  // namespace uprop::metrics
