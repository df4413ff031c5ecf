#include "uprop/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include "uprop/io_util.hpp"
#include "uprop/metrics.hpp"

namespace uprop::report {

namespace {

std::string format_roundtrip(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("bad number \"" + std::string(s) + "\" in " + context);
  }
  return v;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

double score_one(const TaskRecord& task, const MethodSpec& method,
                 const ScoringOptions& options) {
  if (method.is_uprop) {
    return estimators::uprop_score(task, options.match_threshold,
                                   options.intrinsic, options.pmi,
                                   options.eps)
        .score;
  }
  return baselines::baseline_task(task, method.method, method.agg,
                                  options.sim_threshold);
}

}  // namespace

std::string format_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

MethodSpec parse_method_spec(const std::string& id) {
  MethodSpec spec;
  spec.id = id;
  if (id == "uprop") {
    spec.is_uprop = true;
    return spec;
  }
  std::size_t dash = id.rfind('-');
  if (dash != std::string::npos) {
    std::string name = id.substr(0, dash);
    std::string agg = id.substr(dash + 1);
    if (baselines::parse_method(name, spec.method) &&
        baselines::parse_aggregation(agg, spec.agg)) {
      return spec;
    }
  }
  baselines::Method bare;
  if (baselines::parse_method(id, bare)) {
    // Bare baseline name defaults to averaging; the id keeps the suffix so
    // report rows are unambiguous.
    spec.method = bare;
    spec.agg = baselines::Aggregation::kAvg;
    spec.id = id + "-avg";
    return spec;
  }
  throw InputError("unknown method \"" + id +
                   "\" (expected uprop or <baseline>-<avg|rms>)");
}

std::vector<ScoreRow> score_tasks(std::span<const TaskRecord> tasks,
                                  std::span<const MethodSpec> methods,
                                  const ScoringOptions& options) {
  const int n_tasks = static_cast<int>(tasks.size());
  std::vector<std::vector<ScoreRow>> per_task(n_tasks);
  std::exception_ptr first_error;

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n_tasks; ++i) {
    try {
      std::vector<ScoreRow> rows;
      rows.reserve(methods.size());
      for (const MethodSpec& m : methods) {
        ScoreRow row;
        row.task_id = tasks[i].task_id;
        row.method = m.id;
        row.uncertainty = score_one(tasks[i], m, options);
        row.correct = tasks[i].correct;
        rows.push_back(std::move(row));
      }
      per_task[i] = std::move(rows);
    } catch (...) {
#pragma omp critical
      {
        if (!first_error) first_error = std::current_exception();
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<ScoreRow> all;
  all.reserve(static_cast<std::size_t>(n_tasks) * methods.size());
  for (auto& rows : per_task) {
    for (auto& row : rows) all.push_back(std::move(row));
  }
  return all;
}

void write_scores_csv(const std::string& path,
                      std::span<const ScoreRow> rows) {
  std::ostringstream out;
  out << "task_id,method,uncertainty,correct\n";
  for (const ScoreRow& r : rows) {
    out << csv_quote(r.task_id) << ',' << r.method << ','
        << format_roundtrip(r.uncertainty) << ','
        << (r.correct ? (*r.correct ? "1" : "0") : "") << '\n';
  }
  write_file_atomic(path, out.str());
}

std::vector<ScoreRow> read_scores_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || csv_split(line) !=
                                     std::vector<std::string>{
                                         "task_id", "method", "uncertainty",
                                         "correct"}) {
    throw ParseError(path + ":1: expected header task_id,method,uncertainty,correct");
  }
  std::vector<ScoreRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields = csv_split(line);
    if (fields.size() != 4) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected 4 fields");
    }
    ScoreRow r;
    r.task_id = fields[0];
    r.method = fields[1];
    r.uncertainty = parse_double(fields[2],
                                 path + ":" + std::to_string(lineno));
    if (!fields[3].empty()) r.correct = fields[3] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<EvalRow> evaluate_scores(std::span<const ScoreRow> rows) {
  // Group by method, preserving first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<metrics::LabeledScore>> labeled;
  std::map<std::string, std::size_t> unlabeled;
  for (const ScoreRow& r : rows) {
    if (!labeled.count(r.method) && !unlabeled.count(r.method)) {
      order.push_back(r.method);
    }
    if (r.correct) {
      labeled[r.method].push_back({r.uncertainty, *r.correct});
    } else {
      ++unlabeled[r.method];
    }
  }

  std::vector<EvalRow> out;
  for (const std::string& method : order) {
    EvalRow row;
    row.method = method;
    const auto& items = labeled[method];
    if (items.empty()) {
      row.warning = "no correctness labels; metrics skipped";
      out.push_back(std::move(row));
      continue;
    }
    row.success_rate = metrics::success_rate(items);
    row.auarc = metrics::auarc(items);
    try {
      row.auroc = metrics::auroc(items);
    } catch (const InputError&) {
      row.warning = "single-class labels; auroc skipped";
    }
    out.push_back(std::move(row));
  }
  return out;
}

void write_eval_csv(const std::string& path, std::span<const EvalRow> rows) {
  std::ostringstream out;
  out << "method,auroc,auarc,success_rate\n";
  std::vector<std::string> warnings;
  for (const EvalRow& r : rows) {
    out << r.method << ',' << (r.auroc ? format_g6(*r.auroc) : "") << ','
        << (r.auarc ? format_g6(*r.auarc) : "") << ','
        << (r.success_rate ? format_g6(*r.success_rate) : "") << '\n';
    if (!r.warning.empty()) {
      warnings.push_back("# warning: " + r.method + ": " + r.warning);
    }
  }
  for (const std::string& w : warnings) out << w << '\n';
  write_file_atomic(path, out.str());
}

TaskRecord truncate_task(const TaskRecord& task, int z, int n) {
  TaskRecord out = task;
  if (z > 0 && static_cast<std::size_t>(z) < out.tdps.size()) {
    out.tdps.resize(z);
  }
  if (n > 0) {
    for (TdpRecord& tdp : out.tdps) {
      for (StepRecord& step : tdp.steps) {
        if (static_cast<std::size_t>(n) >= step.samples.size()) continue;
        if (step.chosen_index >= n) {
          step.samples[n - 1] = step.samples[step.chosen_index];
          step.chosen_index = n - 1;
        }
        step.samples.resize(n);
      }
    }
  }
  return out;
}

void build_report(std::span<const TaskRecord> tasks,
                  std::span<const ScoreRow> scores, const ReportSpec& spec,
                  const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  // Main table from the provided scores.
  std::vector<EvalRow> table = evaluate_scores(scores);
  write_eval_csv((fs::path(out_dir) / "table.csv").string(), table);

  // Sampling-efficiency sweep: re-score truncated copies of the records.
  if (spec.sweep) {
    int recorded = 0;
    for (const TaskRecord& t : tasks) {
      int size = *spec.sweep == 'z'
                     ? static_cast<int>(t.tdps.size())
                     : t.gen_config.samples_per_step;
      recorded = std::max(recorded, size);
    }
    std::ostringstream out;
    out << "method," << *spec.sweep << ",auroc,auarc,success_rate\n";
    for (int size = 2; size <= recorded; ++size) {
      std::vector<TaskRecord> truncated;
      truncated.reserve(tasks.size());
      for (const TaskRecord& t : tasks) {
        truncated.push_back(*spec.sweep == 'z' ? truncate_task(t, size, 0)
                                               : truncate_task(t, 0, size));
      }
      std::vector<ScoreRow> rows =
          score_tasks(truncated, spec.methods, spec.options);
      for (const EvalRow& r : evaluate_scores(rows)) {
        out << r.method << ',' << size << ','
            << (r.auroc ? format_g6(*r.auroc) : "") << ','
            << (r.auarc ? format_g6(*r.auarc) : "") << ','
            << (r.success_rate ? format_g6(*r.success_rate) : "") << '\n';
      }
    }
    write_file_atomic((fs::path(out_dir) / "sweep.csv").string(), out.str());
  }

  // Per-step IU/EU fraction series and chart.
  estimators::StepFractionSeries series = estimators::iu_eu_fractions(
      tasks, spec.options.intrinsic, spec.options.pmi, spec.options.eps);
  {
    std::ostringstream out;
    out << "step,iu_fraction,eu_fraction,tdp_count\n";
    for (std::size_t t = 0; t < series.iu_mean.size(); ++t) {
      out << (t + 1) << ',' << format_g6(series.iu_mean[t]) << ','
          << format_g6(series.eu_mean[t]) << ',' << series.tdp_count[t]
          << '\n';
    }
    write_file_atomic((fs::path(out_dir) / "fractions.csv").string(),
                      out.str());
  }
  {
    // Standalone SVG 1.1 line chart: IU fraction in red, EU in blue.
    const double width = 640.0;
    const double height = 400.0;
    const double margin = 48.0;
    const std::size_t n = series.iu_mean.size();
    auto x_of = [&](std::size_t t) {
      if (n <= 1) return margin;
      return margin + (width - 2 * margin) * static_cast<double>(t) /
                          static_cast<double>(n - 1);
    };
    auto y_of = [&](double frac) {
      return height - margin - (height - 2 * margin) * frac;
    };
    auto points = [&](const std::vector<double>& ys) {
      std::string s;
      char buf[64];
      for (std::size_t t = 0; t < ys.size(); ++t) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x_of(t), y_of(ys[t]));
        s += buf;
      }
      if (!s.empty()) s.pop_back();
      return s;
    };
    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
           "width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n"
        << "  <rect width=\"640\" height=\"400\" fill=\"white\"/>\n"
        << "  <line x1=\"48\" y1=\"352\" x2=\"592\" y2=\"352\" "
           "stroke=\"black\"/>\n"
        << "  <line x1=\"48\" y1=\"48\" x2=\"48\" y2=\"352\" "
           "stroke=\"black\"/>\n"
        << "  <text x=\"320\" y=\"384\" text-anchor=\"middle\" "
           "font-size=\"14\">decision step</text>\n"
        << "  <text x=\"16\" y=\"200\" text-anchor=\"middle\" "
           "font-size=\"14\" transform=\"rotate(-90 16 200)\">uncertainty "
           "fraction</text>\n";
    if (n > 0) {
      svg << "  <polyline fill=\"none\" stroke=\"red\" stroke-width=\"2\" "
             "points=\""
          << points(series.iu_mean) << "\"/>\n"
          << "  <polyline fill=\"none\" stroke=\"blue\" stroke-width=\"2\" "
             "points=\""
          << points(series.eu_mean) << "\"/>\n";
    }
    svg << "  <text x=\"500\" y=\"64\" font-size=\"13\" "
           "fill=\"red\">IU fraction</text>\n"
        << "  <text x=\"500\" y=\"82\" font-size=\"13\" "
           "fill=\"blue\">EU fraction</text>\n"
        << "</svg>\n";
    write_file_atomic((fs::path(out_dir) / "fractions.svg").string(),
                      svg.str());
  }
}

}  // namespace uprop::report
