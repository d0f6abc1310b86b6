#include "lidarnav/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace lidarnav::harness {

double score(Outcome outcome, int steps, int t_max) {
  if (t_max < 1 || steps < 0 || steps > t_max) throw std::invalid_argument("score: need 0 <= T_s <= T_max");
  if (outcome != Outcome::Success) return -1.0;
  return 1.0 - 2.0 * static_cast<double>(steps) / static_cast<double>(t_max);
}

const ScenarioEval* EvalRecord::find(const std::string& name) const {
  for (const auto& s : scenarios) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

ScenarioEval aggregate(const std::string& name, const std::vector<TaskOutcome>& tasks) {
  ScenarioEval e;
  e.name = name;
  if (tasks.empty()) return e;
  double successes = 0.0, scores = 0.0, steps = 0.0;
  for (const auto& t : tasks) {
    successes += t.outcome == Outcome::Success ? 1.0 : 0.0;
    scores += t.score;
    steps += t.steps;
  }
  const double n = static_cast<double>(tasks.size());
  e.success_rate = successes / n;
  e.mean_score = scores / n;
  e.mean_steps = steps / n;
  return e;
}

void write_learning_curve_header(std::ostream& out, const std::vector<std::string>& scenarios) {
  out << "step,episodes";
  for (const auto& s : scenarios) out << ',' << s << "/success_rate," << s << "/mean_score," << s << "/mean_steps";
  out << '\n';
}

void write_learning_curve_row(std::ostream& out, const EvalRecord& rec) {
  out << rec.step << ',' << rec.episodes << std::setprecision(17);
  for (const auto& s : rec.scenarios) out << ',' << s.success_rate << ',' << s.mean_score << ',' << s.mean_steps;
  out << '\n';
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number in learning curve: " + s);
  return v;
}

}  // namespace

std::vector<EvalRecord> read_learning_curve(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("learning curve is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "step" || header[1] != "episodes" || (header.size() - 2) % 3 != 0) {
    throw std::invalid_argument("learning curve header malformed");
  }
  std::vector<std::string> names;
  for (std::size_t c = 2; c < header.size(); c += 3) {
    const std::string name = header[c].substr(0, header[c].find('/'));
    if (header[c] != name + "/success_rate" || header[c + 1] != name + "/mean_score" ||
        header[c + 2] != name + "/mean_steps") {
      throw std::invalid_argument("learning curve header malformed near " + header[c]);
    }
    names.push_back(name);
  }
  std::vector<EvalRecord> records;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw std::invalid_argument("learning curve row has wrong column count");
    EvalRecord r;
    r.step = std::stol(cells[0]);
    r.episodes = std::stol(cells[1]);
    for (std::size_t i = 0; i < names.size(); ++i) {
      r.scenarios.push_back(
          {names[i], to_double(cells[2 + 3 * i]), to_double(cells[3 + 3 * i]), to_double(cells[4 + 3 * i])});
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<EvalRecord> load_learning_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open learning curve: " + path);
  try {
    return read_learning_curve(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_task_outcomes_csv(std::ostream& out, const std::vector<TaskOutcome>& tasks) {
  out << "task,outcome,steps,score,return,path_length,straight_line,path_ratio\n" << std::setprecision(10);
  for (const auto& t : tasks) {
    out << t.task << ',' << to_string(t.outcome) << ',' << t.steps << ',' << t.score << ',' << t.total_return << ','
        << t.path_length << ',' << t.straight_line << ',' << t.path_ratio() << '\n';
  }
}

std::vector<RunMetrics> run_metrics(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("run has no evaluation records");
  std::vector<RunMetrics> out;
  for (const auto& s : records.front().scenarios) out.push_back({s.name, 0.0, -1.0});
  for (const auto& r : records) {
    if (r.scenarios.size() != out.size()) throw std::invalid_argument("inconsistent scenarios");
    for (auto& m : out) {
      const ScenarioEval* e = r.find(m.scenario);
      if (e == nullptr) throw std::invalid_argument("inconsistent scenarios");
      m.msr = std::max(m.msr, e->success_rate);
      m.mans = std::max(m.mans, e->mean_score);
    }
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<std::vector<EvalRecord>>& runs) {
  if (runs.empty()) throw std::invalid_argument("no runs to summarize");
  std::vector<std::vector<RunMetrics>> per_run;
  for (const auto& r : runs) per_run.push_back(run_metrics(r));
  std::vector<SummaryRow> rows;
  for (const auto& m : per_run.front()) rows.push_back({m.scenario, static_cast<int>(runs.size())});
  for (const auto& metrics : per_run) {
    if (metrics.size() != rows.size()) throw std::invalid_argument("inconsistent scenarios");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (metrics[i].scenario != rows[i].scenario) throw std::invalid_argument("inconsistent scenarios");
    }
  }
  const double n = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double msr = 0.0, mans = 0.0;
    for (const auto& metrics : per_run) {
      msr += metrics[i].msr;
      mans += metrics[i].mans;
    }
    rows[i].msr_mean = msr / n;
    rows[i].mans_mean = mans / n;
    double vm = 0.0, va = 0.0;
    for (const auto& metrics : per_run) {
      vm += (metrics[i].msr - rows[i].msr_mean) * (metrics[i].msr - rows[i].msr_mean);
      va += (metrics[i].mans - rows[i].mans_mean) * (metrics[i].mans - rows[i].mans_mean);
    }
    rows[i].msr_sd = std::sqrt(vm / n);
    rows[i].mans_sd = std::sqrt(va / n);
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "scenario,runs,msr_mean,msr_sd_pop,mans_mean,mans_sd_pop\n" << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.runs << ',' << r.msr_mean << ',' << r.msr_sd << ',' << r.mans_mean << ','
        << r.mans_sd << '\n';
  }
}

void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows) {
  std::size_t w = 8;
  for (const auto& r : rows) w = std::max(w, r.scenario.size());
  const auto flags = out.flags();
  out << std::left << std::setw(static_cast<int>(w)) << "scenario" << "  runs  " << std::setw(19) << "MSR mean/SD(pop)"
      << "  MANS mean/SD(pop)\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& r : rows) {
    std::ostringstream msr, mans;
    msr << std::fixed << std::setprecision(3) << r.msr_mean << " / " << r.msr_sd;
    mans << std::fixed << std::setprecision(3) << r.mans_mean << " / " << r.mans_sd;
    out << std::left << std::setw(static_cast<int>(w)) << r.scenario << "  " << std::right << std::setw(4) << r.runs
        << "  " << std::left << std::setw(19) << msr.str() << "  " << mans.str() << '\n';
  }
  out.flags(flags);
}

double success_area(const std::vector<EvalRecord>& records, const std::string& scenario) {
  double total = 0.0;
  for (const auto& r : records) {
    const ScenarioEval* e = r.find(scenario);
    if (e == nullptr) throw std::invalid_argument("scenario missing from learning curve: " + scenario);
    total += e->success_rate;
  }
  return total;
}

}  // namespace lidarnav::harness
