#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lidarnav/harness/checkpoint.hpp"
#include "lidarnav/harness/config.hpp"
#include "lidarnav/harness/metrics.hpp"
#include "lidarnav/nav_env.hpp"
#include "lidarnav/tinygrad/gradcheck.hpp"

namespace lidarnav::harness {

/// Policy adapter for run_episode: stochastic in Train mode, mean action in Eval.
class SacController : public Controller {
 public:
  SacController(const Agent& agent, Rng& rng) : agent_(agent), rng_(rng) {}
  std::vector<double> act(const std::vector<float>& obs, bool deterministic) override;

 private:
  const Agent& agent_;
  Rng& rng_;
};

/// A task suite with its map loaded.
struct LoadedSuite {
  std::string name;
  TaskSuite suite;
  std::shared_ptr<const OccupancyGrid> map;
};
LoadedSuite load_scenario(const Scenario& scenario);

struct SuiteResult {
  ScenarioEval summary;
  std::vector<TaskOutcome> tasks;
  /// Filled only when trajectories were requested.
  std::vector<std::vector<TrajectoryRow>> trajectories;
};

/// Deterministic rollouts of the frozen policy, one per task. Tasks may run on
/// `threads` workers; results do not depend on the thread count.
SuiteResult evaluate_suite(const Agent& agent, const NavConfig& nav, const LoadedSuite& suite, int threads = 1,
                           bool keep_trajectories = false);

struct TrainOptions {
  /// One line per evaluation; null for silence.
  std::ostream* progress = nullptr;
  int eval_threads = 1;
  /// Write config echo, CSVs and checkpoints into config.out_dir.
  bool write_files = true;
};

struct TrainResult {
  std::vector<EvalRecord> records;
  long episodes = 0;
  long steps = 0;
  std::unique_ptr<Agent> agent;
};

/// Random-action episodes first, then SAC with one update block per
/// environment step. Evaluates (and checkpoints) at step 0 and every
/// eval_period steps. Throws before any training on an invalid config.
TrainResult train(const ExperimentConfig& config, const TrainOptions& options = {});

struct EvalReport {
  EvalRecord record;
  SuiteResult result;
  /// Over successful tasks with a positive start-goal distance.
  double mean_path_ratio = 0.0;
};

/// Evaluates a checkpoint on a suite. `nav_override`, when set, must use the
/// checkpoint's robot and lidar; episode settings (dt, t_max, ...) may differ.
EvalReport evaluate_checkpoint(const Checkpoint& ck, const LoadedSuite& suite,
                               const std::optional<NavConfig>& nav_override = std::nullopt, int threads = 1);
/// Writes eval_tasks.csv and trajectories/task_NNN.csv into `out_dir`.
void write_eval_outputs(const std::string& out_dir, const EvalReport& report);

/// IP parameters currently held by an agent (policy side).
IpParams agent_ip_params(const Agent& agent);
PosReport pos_report_for(const ExperimentConfig& config, const IpParams* params = nullptr);

struct GradcheckSummary {
  std::string network;
  tg::GradcheckResult result;
};
/// Gradcheck (64-bit, dropout off) of the policy and critic networks the
/// config describes, with their IP parameters at a non-trivial value.
std::vector<GradcheckSummary> gradcheck_config(const ExperimentConfig& config, std::size_t max_entries = 64);

}  // namespace lidarnav::harness
