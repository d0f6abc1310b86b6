#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "lidarnav/harness/experiment.hpp"

using namespace lidarnav;
using namespace lidarnav::harness;
namespace fs = std::filesystem;

namespace {

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
  std::string suite;
  std::vector<std::string> runs;
  std::string map;
  int count = 20;
  int threads = 1;
  std::optional<long> total_steps;
};

ExperimentConfig config_with_overrides(const Args& a) {
  ExperimentConfig cfg = load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.total_steps) cfg.total_steps = *a.total_steps;
  cfg.validate();
  return cfg;
}

int cmd_train(const Args& a) {
  const auto cfg = config_with_overrides(a);
  TrainOptions opt;
  opt.progress = &std::cout;
  opt.eval_threads = a.threads;
  const auto r = train(cfg, opt);
  std::cout << "finished " << r.steps << " steps, " << r.episodes << " episodes; outputs in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_eval(const Args& a) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  std::optional<NavConfig> nav;
  if (!a.config.empty()) nav = load_config(a.config).nav;
  const LoadedSuite suite = load_scenario({fs::path(a.suite).stem().string(), a.suite});
  const EvalReport rep = evaluate_checkpoint(ck, suite, nav, a.threads);
  if (!a.out.empty()) write_eval_outputs(a.out, rep);
  write_task_outcomes_csv(std::cout, rep.result.tasks);
  const auto& s = rep.result.summary;
  std::cout << "# step " << rep.record.step << "  success_rate " << s.success_rate << "  mean_score " << s.mean_score
            << "  mean_steps " << s.mean_steps << "  mean_path_ratio " << rep.mean_path_ratio << "\n";
  return 0;
}

int cmd_summarize(const Args& a) {
  std::vector<std::vector<EvalRecord>> runs;
  for (const auto& dir : a.runs) {
    const fs::path p = fs::is_directory(dir) ? fs::path(dir) / "learning_curve.csv" : fs::path(dir);
    runs.push_back(load_learning_curve(p.string()));
  }
  const auto rows = summarize(runs);
  write_summary_table(std::cout, rows);
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot write " + a.out);
    write_summary_csv(out, rows);
  }
  return 0;
}

int cmd_pos_report(const Args& a) {
  const auto cfg = config_with_overrides(a);
  std::optional<IpParams> params;
  if (!a.checkpoint.empty()) params = agent_ip_params(*load_checkpoint(a.checkpoint).agent);
  const auto rep = pos_report_for(cfg, params ? &*params : nullptr);
  if (a.out.empty()) {
    write_pos_report_csv(std::cout, rep);
  } else {
    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot write " + a.out);
    write_pos_report_csv(out, rep);
  }
  int failing = 0;
  for (const auto& b : rep.beams) failing += (!b.conditions_hold || b.rho_mapped < b.rho_linear) ? 1 : 0;
  std::cerr << to_string(rep.family) << ": " << rep.beams.size() - failing << "/" << rep.beams.size()
            << " beams satisfy the conditions with mapped PoS >= linear PoS\n";
  return 0;
}

int cmd_gradcheck(const Args& a) {
  const auto cfg = config_with_overrides(a);
  constexpr double kTolerance = 1e-4;
  bool ok = true;
  for (const auto& g : gradcheck_config(cfg)) {
    const bool pass = g.result.max_rel_error < kTolerance;
    ok = ok && pass;
    std::cout << g.network << ": checked " << g.result.checked << " entries, max rel error " << std::scientific
              << g.result.max_rel_error << std::defaultfloat << " (" << g.result.worst_parameter << ") "
              << (pass ? "PASS" : "FAIL") << "\n";
  }
  return ok ? 0 : 2;
}

int cmd_make_suite(const Args& a) {
  const auto cfg = config_with_overrides(a);
  const OccupancyGrid map = load_map(a.map);
  Rng rng = RngStreams(cfg.seed).stream("suite");
  std::string map_ref = a.map;
  if (!a.out.empty()) {
    map_ref = fs::relative(fs::absolute(a.map), fs::absolute(a.out).parent_path()).string();
  }
  const TaskSuite suite = make_suite(map, cfg.nav, a.count, rng, map_ref);
  if (a.out.empty()) {
    write_suite(std::cout, suite);
  } else {
    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot write " + a.out);
    write_suite(out, suite);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR mapless navigation with trainable input pre-processing"};
  app.require_subcommand(1);
  Args a;

  auto* train = app.add_subcommand("train", "Train an agent from a config");
  train->add_option("--config", a.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", a.seed, "Override the root seed");
  train->add_option("--out", a.out, "Override the output directory");
  train->add_option("--total-steps", a.total_steps, "Override the number of environment steps");
  train->add_option("--threads", a.threads, "Evaluation worker threads")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a task suite");
  eval->add_option("--checkpoint", a.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--suite", a.suite, "Task suite file")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", a.out, "Directory for eval_tasks.csv and trajectories");
  eval->add_option("--config", a.config, "Config whose robot/lidar must match the checkpoint")
      ->check(CLI::ExistingFile);
  eval->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* summ = app.add_subcommand("summarize", "MSR / MANS across runs");
  summ->add_option("runs", a.runs, "Run directories or learning_curve.csv files")->required();
  summ->add_option("--out", a.out, "Write the summary CSV here");

  auto* pos = app.add_subcommand("pos-report", "Per-beam PoS of linear vs mapped scans");
  pos->add_option("--config", a.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  pos->add_option("--checkpoint", a.checkpoint, "Use the trained IP parameters of this checkpoint")
      ->check(CLI::ExistingFile);
  pos->add_option("--out", a.out, "CSV output file (default stdout)");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of the configured networks");
  grad->add_option("--config", a.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  grad->add_option("--seed", a.seed, "Seed for weights and inputs");

  auto* mk = app.add_subcommand("make-suite", "Sample a reproducible task suite on a map");
  mk->add_option("--config", a.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  mk->add_option("--map", a.map, "Map file")->required()->check(CLI::ExistingFile);
  mk->add_option("--count", a.count, "Number of tasks")->check(CLI::PositiveNumber);
  mk->add_option("--seed", a.seed, "Override the root seed");
  mk->add_option("--out", a.out, "Suite file (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (train->parsed()) return cmd_train(a);
    if (eval->parsed()) return cmd_eval(a);
    if (summ->parsed()) return cmd_summarize(a);
    if (pos->parsed()) return cmd_pos_report(a);
    if (grad->parsed()) return cmd_gradcheck(a);
    if (mk->parsed()) return cmd_make_suite(a);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
