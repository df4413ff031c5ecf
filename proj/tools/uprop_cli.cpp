// uprop - uncertainty propagation for multi-step decision processes.
//
// Pipeline: run (sample trajectories) -> score (estimators over recorded
// trajectories) -> eval / report (metrics, sweeps, charts). simulate runs
// the exact-oracle convergence experiment on a process table.

#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uprop/errors.hpp"
#include "uprop/io_util.hpp"
#include "uprop/oracle.hpp"
#include "uprop/orchestrator.hpp"
#include "uprop/report.hpp"
#include "uprop/serialize.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct ScoreFlags {
  double match_threshold = 0.3;
  double sim_threshold = 0.7;
  std::string intrinsic = "pe";
  std::string pmi = "faithful";
  double iu_floor = 1e-6;
};

void add_score_flags(CLI::App* cmd, ScoreFlags& flags) {
  cmd->add_option("--match-threshold", flags.match_threshold,
                  "answer-match distance threshold for the uprop filter")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--sim-threshold", flags.sim_threshold,
                  "similarity threshold for baseline clustering")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--intrinsic", flags.intrinsic, "pe|lnpe")
      ->check(CLI::IsMember({"pe", "lnpe"}));
  cmd->add_option("--pmi", flags.pmi, "faithful|calibrated")
      ->check(CLI::IsMember({"faithful", "calibrated"}));
  cmd->add_option("--iu-floor", flags.iu_floor,
                  "intrinsic-entropy floor in the sigma denominator")
      ->check(CLI::PositiveNumber);
}

uprop::report::ScoringOptions to_options(const ScoreFlags& flags) {
  uprop::report::ScoringOptions options;
  options.match_threshold = flags.match_threshold;
  options.sim_threshold = flags.sim_threshold;
  options.intrinsic = flags.intrinsic == "lnpe"
                          ? uprop::estimators::IntrinsicMode::kLnPe
                          : uprop::estimators::IntrinsicMode::kPe;
  options.pmi = flags.pmi == "calibrated"
                    ? uprop::estimators::PmiMode::kCalibrated
                    : uprop::estimators::PmiMode::kFaithful;
  options.eps.iu_floor = flags.iu_floor;
  return options;
}

std::vector<uprop::report::MethodSpec> resolve_methods(
    const std::vector<std::string>& names, const std::string& agg) {
  std::vector<uprop::report::MethodSpec> methods;
  for (const std::string& name : names) {
    std::string id = name;
    if (id != "uprop" && id.find('-') == std::string::npos) {
      id += "-" + agg;
    }
    methods.push_back(uprop::report::parse_method_spec(id));
  }
  return methods;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uncertainty propagation for multi-step decision processes"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "read flags from a config file ([subcommand] sections)");

  // --- run -----------------------------------------------------------------
  auto* run = app.add_subcommand("run", "sample trajectories per a run plan");
  std::string run_plan_path;
  std::string run_out;
  run->add_option("--plan", run_plan_path, "run plan JSON")->required();
  run->add_option("--out", run_out, "output trajectory JSONL")->required();

  // --- score ---------------------------------------------------------------
  auto* score = app.add_subcommand("score", "score recorded trajectories");
  std::string score_in;
  std::string score_out;
  std::vector<std::string> score_methods;
  std::string score_agg = "avg";
  bool lenient = false;
  ScoreFlags score_flags;
  score->add_option("--in", score_in, "trajectory JSONL")->required();
  score->add_option("--out", score_out, "output scores CSV")->required();
  score->add_option("--method", score_methods,
                    "uprop or baseline name (repeatable)")
      ->required();
  score->add_option("--agg", score_agg, "aggregation for bare baseline names")
      ->check(CLI::IsMember({"avg", "rms"}));
  score->add_flag("--lenient", lenient, "tolerate unknown trajectory fields");
  add_score_flags(score, score_flags);

  // --- eval ----------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "metrics from a scores CSV");
  std::string eval_scores;
  std::string eval_out;
  eval->add_option("--scores", eval_scores, "scores CSV")->required();
  eval->add_option("--out", eval_out, "output report CSV")->required();

  // --- simulate ------------------------------------------------------------
  auto* simulate =
      app.add_subcommand("simulate", "oracle convergence experiment");
  std::string sim_table;
  std::string sim_out;
  std::string sim_zgrid = "10,100,1000,10000";
  int sim_n = 10;
  std::uint64_t sim_seed = 7;
  std::string sim_pmi = "calibrated";
  simulate->add_option("--table", sim_table, "process table JSON")->required();
  simulate->add_option("--out", sim_out, "output convergence CSV")->required();
  simulate->add_option("--z-grid", sim_zgrid, "comma-separated TDP counts");
  simulate->add_option("--n", sim_n, "samples per step")
      ->check(CLI::Range(2, 1000000));
  simulate->add_option("--seed", sim_seed, "base seed");
  simulate->add_option("--pmi", sim_pmi, "kernel-path PMI mode")
      ->check(CLI::IsMember({"faithful", "calibrated"}));

  // --- report --------------------------------------------------------------
  auto* report = app.add_subcommand("report", "tables, sweeps, and charts");
  std::string report_in;
  std::string report_scores;
  std::string report_out;
  std::string report_sweep;
  bool report_lenient = false;
  ScoreFlags report_flags;
  report->add_option("--in", report_in, "trajectory JSONL")->required();
  report->add_option("--scores", report_scores, "scores CSV")->required();
  report->add_option("--out", report_out, "output directory")->required();
  report->add_option("--sweep", report_sweep, "sweep axis: z or n")
      ->check(CLI::IsMember({"z", "n"}));
  report->add_flag("--lenient", report_lenient,
                   "tolerate unknown trajectory fields");
  add_score_flags(report, report_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) {
      uprop::orchestrator::RunPlan plan =
          uprop::orchestrator::load_plan(run_plan_path);
      std::vector<uprop::TaskRecord> records =
          uprop::orchestrator::run_plan(plan);
      uprop::write_trajectory_file(run_out, records);
      std::cerr << "wrote " << records.size() << " tasks to " << run_out
                << " (selection="
                << (plan.selection ==
                            uprop::orchestrator::SelectionMode::kWeighted
                        ? "weighted"
                        : "uniform")
                << ", seed=" << plan.gen_config.seed << ")\n";
    } else if (*score) {
      auto mode = lenient ? uprop::ParseMode::kLenient
                          : uprop::ParseMode::kStrict;
      std::vector<uprop::TaskRecord> tasks =
          uprop::read_trajectory_file(score_in, mode);
      auto methods = resolve_methods(score_methods, score_agg);
      auto rows =
          uprop::report::score_tasks(tasks, methods, to_options(score_flags));
      uprop::report::write_scores_csv(score_out, rows);
      std::cerr << "wrote " << rows.size() << " score rows to " << score_out
                << "\n";
    } else if (*eval) {
      auto rows = uprop::report::read_scores_csv(eval_scores);
      auto table = uprop::report::evaluate_scores(rows);
      uprop::report::write_eval_csv(eval_out, table);
      std::cerr << "wrote " << table.size() << " method rows to " << eval_out
                << "\n";
    } else if (*simulate) {
      uprop::oracle::ProcessTable table = uprop::oracle::load_table(sim_table);
      std::vector<int> z_grid;
      std::stringstream ss(sim_zgrid);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) z_grid.push_back(std::stoi(item));
      }
      auto pmi_mode = sim_pmi == "faithful"
                          ? uprop::estimators::PmiMode::kFaithful
                          : uprop::estimators::PmiMode::kCalibrated;
      uprop::oracle::ConvergenceReport rep =
          uprop::oracle::convergence_experiment(table, z_grid, sim_n, sim_seed,
                                                pmi_mode);
      std::ostringstream out;
      out << "z,path,mean,stderr,rel_error,exact_entropy\n";
      for (const auto& pt : rep.points) {
        out << pt.z << ",exact-pmi," << uprop::report::format_g6(pt.exact_mean)
            << ',' << uprop::report::format_g6(pt.exact_stderr) << ','
            << uprop::report::format_g6(pt.exact_rel_error) << ','
            << uprop::report::format_g6(rep.exact_entropy) << '\n';
        out << pt.z << ",kernel," << uprop::report::format_g6(pt.kernel_mean)
            << ',' << uprop::report::format_g6(pt.kernel_stderr) << ','
            << uprop::report::format_g6(pt.kernel_rel_error) << ','
            << uprop::report::format_g6(rep.exact_entropy) << '\n';
      }
      uprop::write_file_atomic(sim_out, out.str());
      std::cerr << "wrote convergence report to " << sim_out << "\n";
    } else if (*report) {
      auto mode = report_lenient ? uprop::ParseMode::kLenient
                                 : uprop::ParseMode::kStrict;
      std::vector<uprop::TaskRecord> tasks =
          uprop::read_trajectory_file(report_in, mode);
      auto rows = uprop::report::read_scores_csv(report_scores);
      uprop::report::ReportSpec spec;
      spec.options = to_options(report_flags);
      if (!report_sweep.empty()) spec.sweep = report_sweep[0];
      std::vector<std::string> seen;
      for (const auto& row : rows) {
        if (std::find(seen.begin(), seen.end(), row.method) == seen.end()) {
          seen.push_back(row.method);
          spec.methods.push_back(uprop::report::parse_method_spec(row.method));
        }
      }
      uprop::report::build_report(tasks, rows, spec, report_out);
      std::cerr << "wrote report bundle to " << report_out << "\n";
    }
  } catch (const uprop::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
