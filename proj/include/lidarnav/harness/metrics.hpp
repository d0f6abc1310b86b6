#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lidarnav/nav_env.hpp"

namespace lidarnav::harness {

/// 1 - 2 T_s / T_max on success, -1 otherwise.
double score(Outcome outcome, int steps, int t_max);

struct ScenarioEval {
  std::string name;
  double success_rate = 0.0;
  double mean_score = -1.0;
  double mean_steps = 0.0;
};

struct EvalRecord {
  long step = 0;
  long episodes = 0;
  std::vector<ScenarioEval> scenarios;

  const ScenarioEval* find(const std::string& name) const;
};

struct TaskOutcome {
  int task = 0;
  Outcome outcome = Outcome::Timeout;
  int steps = 0;
  double score = -1.0;
  double total_return = 0.0;
  double path_length = 0.0;
  double straight_line = 0.0;

  /// Traveled over straight-line distance; 0 when the goal started in reach.
  double path_ratio() const { return straight_line > 0.0 ? path_length / straight_line : 0.0; }
};

ScenarioEval aggregate(const std::string& name, const std::vector<TaskOutcome>& tasks);

/// Learning curve, one row per evaluation:
///   step,episodes,<scenario>/success_rate,<scenario>/mean_score,<scenario>/mean_steps,...
void write_learning_curve_header(std::ostream& out, const std::vector<std::string>& scenarios);
void write_learning_curve_row(std::ostream& out, const EvalRecord& rec);
std::vector<EvalRecord> read_learning_curve(std::istream& in);
std::vector<EvalRecord> load_learning_curve(const std::string& path);

void write_task_outcomes_csv(std::ostream& out, const std::vector<TaskOutcome>& tasks);

/// Per-scenario maxima of one run.
struct RunMetrics {
  std::string scenario;
  double msr = 0.0;
  double mans = -1.0;
};
std::vector<RunMetrics> run_metrics(const std::vector<EvalRecord>& records);

struct SummaryRow {
  std::string scenario;
  int runs = 0;
  double msr_mean = 0.0;
  double msr_sd = 0.0;
  double mans_mean = 0.0;
  double mans_sd = 0.0;
};

/// Mean and population SD across runs. Every run must report the same
/// scenarios ("inconsistent scenarios" otherwise) and at least one record.
std::vector<SummaryRow> summarize(const std::vector<std::vector<EvalRecord>>& runs);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Area under the success-rate curve in units of one eval period.
double success_area(const std::vector<EvalRecord>& records, const std::string& scenario);

}  // namespace lidarnav::harness
