#pragma once

// Evaluation of uncertainty scores against correctness labels: AUROC, the
// accuracy-rejection curve area, success rate, and min-uncertainty selection.

#include <span>
#include <vector>

#include "uprop/errors.hpp"

namespace uprop::metrics {

struct LabeledScore {
  double uncertainty = 0.0;  // must be finite
  bool correct = false;
};

// Mann-Whitney AUROC: the probability that a random correct item carries
// strictly lower uncertainty than a random incorrect one, ties weighted 0.5.
// Requires at least one item of each class.
double auroc(std::span<const LabeledScore> items);

// Mean accuracy over the n rejection levels k = 0..n-1, where level k drops
// the k highest-uncertainty items (ties keep input order; the full set is
// never rejected).
double auarc(std::span<const LabeledScore> items);

// Index of the minimum uncertainty; ties break to the lowest index.
std::size_t select_min_uncertainty(std::span<const LabeledScore> candidates);

double success_rate(std::span<const LabeledScore> items);

}  // namespace uprop::metrics
