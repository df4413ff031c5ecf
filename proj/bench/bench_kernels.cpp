// Times the OpenMP kernels against their serial reference implementations:
// exact trajectory enumeration, the per-TDP convergence totals, and batch
// task scoring. Each row reports both timings and checks agreement.

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "uprop/oracle.hpp"
#include "uprop/report.hpp"
#include "uprop/rng.hpp"

using namespace uprop;

namespace {

double time_ms(const std::function<void()>& fn, int repeats) {
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < repeats; ++i) fn();
  auto elapsed = std::chrono::steady_clock::now() - start;
  return std::chrono::duration<double, std::milli>(elapsed).count() / repeats;
}

oracle::ProcessTable big_table(int horizon, int actions) {
  Rng rng(1729);
  oracle::ProcessTable t;
  t.horizon = horizon;
  for (int step = 0; step < horizon; ++step) {
    std::vector<std::string> alphabet;
    for (int a = 0; a < actions; ++a) {
      alphabet.push_back(std::string(1, static_cast<char>('a' + a)));
    }
    t.alphabets.push_back(std::move(alphabet));
  }
  std::vector<std::string> history;
  std::function<void(int)> fill = [&](int step) {
    std::vector<double> probs(actions);
    double total = 0.0;
    for (double& p : probs) {
      p = rng.uniform() + 0.1;
      total += p;
    }
    for (double& p : probs) p /= total;
    double sum = 0.0;
    for (double p : probs) sum += p;
    probs[0] += 1.0 - sum;
    t.conditionals[oracle::history_key(history)] = probs;
    if (step + 1 < horizon) {
      for (const std::string& a : t.alphabets[step]) {
        history.push_back(a);
        fill(step + 1);
        history.pop_back();
      }
    }
  };
  fill(0);
  return t;
}

std::vector<TaskRecord> synthetic_tasks(int count) {
  oracle::ProcessTable table = big_table(4, 4);
  std::vector<TaskRecord> tasks(count);
  for (int i = 0; i < count; ++i) {
    TaskRecord task;
    task.task_id = "bench-" + std::to_string(i);
    task.instruction = "bench";
    task.model_ref = "bench";
    task.correct = i % 2 == 0;
    task.greedy_answer = "a";
    for (int z = 0; z < 10; ++z) {
      Rng rng(derive_seed(i, z));
      task.tdps.push_back(oracle::sample_tdp_exact(table, 10, rng));
    }
    tasks[i] = std::move(task);
  }
  return tasks;
}

void report_row(const char* name, double serial_ms, double parallel_ms,
                bool agree) {
  std::printf("%-28s %10.2f ms %10.2f ms %8.2fx   %s\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms,
              agree ? "agree" : "DISAGREE");
}

}  // namespace

int main() {
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("kernel benchmark, %d thread(s)\n", threads);
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel",
              "speedup");

  {
    oracle::ProcessTable table = big_table(8, 4);  // 65536 trajectories
    double serial_h = 0.0;
    double parallel_h = 0.0;
    double serial_ms = time_ms(
        [&] { serial_h = oracle::exact_total_entropy_serial(table); }, 5);
    double parallel_ms =
        time_ms([&] { parallel_h = oracle::exact_total_entropy(table); }, 5);
    bool agree =
        std::abs(serial_h - parallel_h) <= 1e-9 * std::abs(serial_h);
    report_row("trajectory enumeration", serial_ms, parallel_ms, agree);
  }

  {
    oracle::ProcessTable table = big_table(3, 4);
    oracle::TdpTotals serial_totals, parallel_totals;
    double serial_ms = time_ms(
        [&] {
          serial_totals = oracle::per_tdp_totals_serial(
              table, 20000, 10, 7, estimators::PmiMode::kCalibrated);
        },
        3);
    double parallel_ms = time_ms(
        [&] {
          parallel_totals = oracle::per_tdp_totals(
              table, 20000, 10, 7, estimators::PmiMode::kCalibrated);
        },
        3);
    bool agree = serial_totals.exact_path == parallel_totals.exact_path &&
                 serial_totals.kernel_path == parallel_totals.kernel_path;
    report_row("per-TDP convergence totals", serial_ms, parallel_ms, agree);
  }

  {
    std::vector<TaskRecord> tasks = synthetic_tasks(300);
    std::vector<report::MethodSpec> methods = {
        report::parse_method_spec("uprop"),
        report::parse_method_spec("se-avg"),
        report::parse_method_spec("sentsar-rms"),
    };
    report::ScoringOptions options;
    std::vector<report::ScoreRow> serial_rows, parallel_rows;
#ifdef _OPENMP
    omp_set_num_threads(1);
#endif
    double serial_ms = time_ms(
        [&] { serial_rows = report::score_tasks(tasks, methods, options); },
        3);
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    double parallel_ms = time_ms(
        [&] { parallel_rows = report::score_tasks(tasks, methods, options); },
        3);
    bool agree = serial_rows.size() == parallel_rows.size();
    for (std::size_t i = 0; agree && i < serial_rows.size(); ++i) {
      agree = serial_rows[i].uncertainty == parallel_rows[i].uncertainty;
    }
    report_row("task scoring (3 methods)", serial_ms, parallel_ms, agree);
  }

  return 0;
}
