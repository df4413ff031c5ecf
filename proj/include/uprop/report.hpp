#pragma once

// Turns recorded tasks into score files, metric tables, sampling-efficiency
// sweeps, and the per-step IU/EU fraction series with its SVG chart.
//
// scores.csv keeps full round-trip precision so downstream metrics computed
// from the file equal metrics computed in memory; report tables render at 6
// significant digits.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uprop/baselines.hpp"
#include "uprop/estimators.hpp"
#include "uprop/model.hpp"

namespace uprop::report {

// "uprop" or "<baseline>-<agg>", e.g. "pe-avg", "se-rms".
struct MethodSpec {
  std::string id;
  bool is_uprop = false;
  baselines::Method method = baselines::Method::kPe;
  baselines::Aggregation agg = baselines::Aggregation::kAvg;
};

MethodSpec parse_method_spec(const std::string& id);

struct ScoringOptions {
  double match_threshold = 0.3;  // answer filter for the uprop score
  double sim_threshold = 0.7;    // clustering/similarity for baselines
  estimators::IntrinsicMode intrinsic = estimators::IntrinsicMode::kPe;
  estimators::PmiMode pmi = estimators::PmiMode::kFaithful;
  estimators::EpsilonPolicy eps;
};

struct ScoreRow {
  std::string task_id;
  std::string method;
  double uncertainty = 0.0;
  std::optional<bool> correct;
};

// Scores every task under every method (tasks in parallel, order preserved).
std::vector<ScoreRow> score_tasks(std::span<const TaskRecord> tasks,
                                  std::span<const MethodSpec> methods,
                                  const ScoringOptions& options);

void write_scores_csv(const std::string& path,
                      std::span<const ScoreRow> rows);
std::vector<ScoreRow> read_scores_csv(const std::string& path);

struct EvalRow {
  std::string method;
  std::optional<double> auroc;         // absent: skipped (missing labels)
  std::optional<double> auarc;
  std::optional<double> success_rate;
  std::string warning;                 // why a metric was skipped
};

std::vector<EvalRow> evaluate_scores(std::span<const ScoreRow> rows);
void write_eval_csv(const std::string& path, std::span<const EvalRow> rows);

// First z TDPs and first n samples per step. The chosen realization always
// survives an n-truncation: if its index falls past the cut, it replaces the
// last kept slot (dropping it would break the recorded trajectory).
TaskRecord truncate_task(const TaskRecord& task, int z, int n);

struct ReportSpec {
  std::vector<MethodSpec> methods;
  std::optional<char> sweep;  // 'z' or 'n'
  ScoringOptions options;
};

// Writes table.csv (and sweep.csv / fractions.csv / fractions.svg when
// applicable) under out_dir.
void build_report(std::span<const TaskRecord> tasks,
                  std::span<const ScoreRow> scores, const ReportSpec& spec,
                  const std::string& out_dir);

// 6-significant-digit rendering used by all report tables.
std::string format_g6(double v);

}  // namespace uprop::report
