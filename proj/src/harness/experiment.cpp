#include "lidarnav/harness/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace lidarnav::harness {

namespace fs = std::filesystem;

std::vector<double> SacController::act(const std::vector<float>& obs, bool deterministic) {
  return sac::act(agent_, obs, deterministic ? sac::NoiseMode::Deterministic : sac::NoiseMode::Sample, rng_);
}

LoadedSuite load_scenario(const Scenario& scenario) {
  LoadedSuite s;
  s.name = scenario.name;
  s.suite = load_suite(scenario.suite);
  if (s.suite.map.empty()) throw std::invalid_argument("task suite names no map: " + scenario.suite);
  s.map = std::make_shared<OccupancyGrid>(load_map(s.suite.map));
  return s;
}

SuiteResult evaluate_suite(const Agent& agent, const NavConfig& nav, const LoadedSuite& suite, int threads,
                           bool keep_trajectories) {
  const auto& tasks = suite.suite.tasks;
  const std::size_t n = tasks.size();
  SuiteResult out;
  out.tasks.resize(n);
  if (keep_trajectories) out.trajectories.resize(n);
  for (const auto& t : tasks) validate_task(*suite.map, nav, t, false);

  auto run_range = [&](std::size_t begin, std::size_t step) {
    NavEnv env(suite.map, nav);
    Rng unused(0);  // deterministic acting draws nothing
    SacController ctl(agent, unused);
    for (std::size_t i = begin; i < n; i += step) {
      auto res = run_episode(env, tasks[i], EpisodeMode::Eval, &ctl, unused);
      TaskOutcome& o = out.tasks[i];
      o.task = static_cast<int>(i);
      o.outcome = res.outcome;
      o.steps = res.steps;
      o.score = score(res.outcome, res.steps, nav.t_max);
      o.total_return = res.total_return;
      o.path_length = res.path_length;
      o.straight_line = res.straight_line;
      if (keep_trajectories) out.trajectories[i] = std::move(res.trajectory);
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    run_range(0, 1);
  } else {
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, run_range, w, workers));
    for (auto& j : jobs) j.get();
  }
  out.summary = aggregate(suite.name, out.tasks);
  return out;
}

namespace {

class TrainLoop : public TransitionSink {
 public:
  TrainLoop(const ExperimentConfig& cfg, const TrainOptions& opt)
      : cfg_(cfg),
        opt_(opt),
        streams_(cfg.seed),
        task_rng_(streams_.stream("tasks")),
        explore_rng_(streams_.stream("explore")),
        sample_rng_(streams_.stream("replay")),
        update_rng_(streams_.stream("update")) {
    for (const auto& path : cfg.train_maps) maps_.push_back(std::make_shared<OccupancyGrid>(load_map(path)));
    for (const auto& s : cfg.scenarios) suites_.push_back(load_scenario(s));
    const PooledScan bounds = pooled_bounds(cfg.nav);
    Rng init = streams_.stream("init");
    agent_ = std::make_unique<Agent>(cfg.agent_spec(bounds.y_min, bounds.y_max), init);
    buffer_ = std::make_unique<sac::ReplayBuffer>(static_cast<std::size_t>(cfg.buffer_capacity),
                                                  static_cast<std::size_t>(agent_->obs_dim()), 2);
  }

  TrainResult run() {
    if (opt_.write_files) open_outputs();
    evaluate();
    SacController ctl(*agent_, explore_rng_);
    std::vector<NavEnv> envs;
    for (const auto& m : maps_) envs.emplace_back(m, cfg_.nav);
    while (steps_ < cfg_.total_steps) {
      const std::size_t which =
          std::uniform_int_distribution<std::size_t>(0, maps_.size() - 1)(task_rng_);
      const NavTask task = sample_task(*maps_[which], cfg_.nav, task_rng_, cfg_.train_maps[which]);
      const EpisodeMode mode = episodes_ < cfg_.random_episodes ? EpisodeMode::Random : EpisodeMode::Train;
      ++episodes_;
      loss_count_ = 0;
      critic_loss_ = policy_loss_ = 0.0;
      const auto res = run_episode(envs[which], task, mode, &ctl, explore_rng_, this);
      if (log_) {
        *log_ << episodes_ << ',' << steps_ << ',' << (mode == EpisodeMode::Random ? "random" : "train") << ','
              << which << ',' << to_string(res.outcome) << ',' << res.steps << ',' << res.total_return << ',';
        if (loss_count_ > 0) {
          *log_ << critic_loss_ / loss_count_ << ',' << policy_loss_ / loss_count_;
        } else {
          *log_ << ',';
        }
        *log_ << ',' << zeta_summary() << '\n';
      }
    }
    TrainResult r;
    r.records = records_;
    r.episodes = episodes_;
    r.steps = steps_;
    r.agent = std::move(agent_);
    return r;
  }

  void on_transition(const sac::Transition& t) override {
    buffer_->push(t);
    ++steps_;
    if (buffer_->size() >= static_cast<std::size_t>(cfg_.sac.batch_size)) {
      for (int k = 0; k < cfg_.updates_per_step; ++k) {
        const auto s = sac::update_block(*agent_, *buffer_, sample_rng_, update_rng_);
        critic_loss_ += s.critic_loss;
        policy_loss_ += s.policy_loss;
        ++loss_count_;
      }
    }
    if (steps_ % cfg_.eval_period == 0) evaluate();
  }

  bool stop_requested() const override { return steps_ >= cfg_.total_steps; }

 private:
  void open_outputs() {
    fs::create_directories(fs::path(cfg_.out_dir) / "checkpoints");
    std::ofstream echo(fs::path(cfg_.out_dir) / "config.resolved.json");
    echo << config_to_json(cfg_).dump(2) << '\n';
    curve_.open(fs::path(cfg_.out_dir) / "learning_curve.csv");
    std::vector<std::string> names;
    for (const auto& s : suites_) names.push_back(s.name);
    write_learning_curve_header(curve_, names);
    log_.emplace(fs::path(cfg_.out_dir) / "train_log.csv");
    *log_ << "episode,total_steps,mode,map,outcome,length,return,critic_loss,policy_loss,zeta_mean\n";
    *log_ << std::setprecision(8);
    if (!curve_ || !*log_) throw std::runtime_error("cannot write into " + cfg_.out_dir);
  }

  std::string zeta_summary() const {
    if (!agent_->zeta.defined()) return "";
    double m = 0.0;
    for (float z : agent_->zeta.data()) m += z;
    std::ostringstream s;
    s << std::setprecision(8) << m / static_cast<double>(agent_->zeta.size());
    return s.str();
  }

  void evaluate() {
    EvalRecord rec;
    rec.step = steps_;
    rec.episodes = episodes_;
    for (const auto& s : suites_) rec.scenarios.push_back(evaluate_suite(*agent_, cfg_.nav, s, opt_.eval_threads).summary);
    records_.push_back(rec);
    if (opt_.write_files) {
      write_learning_curve_row(curve_, rec);
      curve_.flush();
      char name[32];
      std::snprintf(name, sizeof(name), "step_%08ld.ckpt", steps_);
      save_checkpoint((fs::path(cfg_.out_dir) / "checkpoints" / name).string(), cfg_, *agent_, steps_, episodes_);
    }
    if (opt_.progress) {
      *opt_.progress << cfg_.name << " seed " << cfg_.seed << " step " << steps_ << " episodes " << episodes_;
      for (const auto& s : rec.scenarios) {
        *opt_.progress << "  " << s.name << " success " << std::fixed << std::setprecision(2) << s.success_rate
                       << " score " << s.mean_score << std::defaultfloat;
      }
      *opt_.progress << std::endl;
    }
  }

  const ExperimentConfig& cfg_;
  const TrainOptions& opt_;
  RngStreams streams_;
  Rng task_rng_;
  Rng explore_rng_;
  Rng sample_rng_;
  Rng update_rng_;
  std::vector<std::shared_ptr<const OccupancyGrid>> maps_;
  std::vector<LoadedSuite> suites_;
  std::unique_ptr<Agent> agent_;
  std::unique_ptr<sac::ReplayBuffer> buffer_;
  std::vector<EvalRecord> records_;
  long steps_ = 0;
  long episodes_ = 0;
  double critic_loss_ = 0.0;
  double policy_loss_ = 0.0;
  int loss_count_ = 0;
  std::ofstream curve_;
  std::optional<std::ofstream> log_;
};

}  // namespace

TrainResult train(const ExperimentConfig& config, const TrainOptions& options) {
  config.validate_files();
  TrainLoop loop(config, options);
  return loop.run();
}

EvalReport evaluate_checkpoint(const Checkpoint& ck, const LoadedSuite& suite,
                               const std::optional<NavConfig>& nav_override, int threads) {
  const NavConfig nav = nav_override.value_or(ck.config.nav);
  const PooledScan bounds = pooled_bounds(nav);
  const auto& agent = *ck.agent;
  // robot and lidar must be the ones the networks were trained on
  ExperimentConfig probe = ck.config;
  probe.nav = nav;
  const auto now = config_to_json(probe);
  const auto then = config_to_json(ck.config);
  if (now["robot"] != then["robot"] || now["lidar"] != then["lidar"] || bounds.y_min != ck.y_min ||
      bounds.y_max != ck.y_max || nav.pooled_beams() * nav.frames + 4 != agent.obs_dim()) {
    throw std::invalid_argument("checkpoint does not match the evaluation lidar/robot setup");
  }
  EvalReport rep;
  rep.result = evaluate_suite(agent, nav, suite, threads, true);
  rep.record.step = ck.step;
  rep.record.episodes = ck.episodes;
  rep.record.scenarios.push_back(rep.result.summary);
  double ratio = 0.0;
  int counted = 0;
  for (const auto& t : rep.result.tasks) {
    if (t.outcome == Outcome::Success && t.straight_line > 0.0) {
      ratio += t.path_ratio();
      ++counted;
    }
  }
  rep.mean_path_ratio = counted > 0 ? ratio / counted : 0.0;
  return rep;
}

void write_eval_outputs(const std::string& out_dir, const EvalReport& report) {
  const fs::path root(out_dir);
  fs::create_directories(root / "trajectories");
  std::ofstream tasks(root / "eval_tasks.csv");
  write_task_outcomes_csv(tasks, report.result.tasks);
  for (std::size_t i = 0; i < report.result.trajectories.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "task_%03zu.csv", i);
    std::ofstream traj(root / "trajectories" / name);
    write_trajectory_csv(traj, report.result.trajectories[i]);
  }
  std::ofstream rec(root / "eval_record.csv");
  write_learning_curve_header(rec, {report.result.summary.name});
  write_learning_curve_row(rec, report.record);
  if (!tasks || !rec) throw std::runtime_error("cannot write evaluation outputs into " + out_dir);
}

IpParams agent_ip_params(const Agent& agent) {
  const auto& ip = agent.spec().ip;
  IpParams p = IpParams::initial(ip.family, ip.sharing, static_cast<std::size_t>(ip.beams()));
  if (agent.zeta.defined()) p.raw.assign(agent.zeta.data().begin(), agent.zeta.data().end());
  return p;
}

PosReport pos_report_for(const ExperimentConfig& config, const IpParams* params) {
  const PooledScan b = pooled_bounds(config.nav);
  const IpParams p = params ? *params : IpParams::initial(config.ip_family, config.ip_sharing, b.y_min.size());
  return pos_report(b.y_min, b.y_max, p);
}

std::vector<GradcheckSummary> gradcheck_config(const ExperimentConfig& config, std::size_t max_entries) {
  const PooledScan b = pooled_bounds(config.nav);
  auto spec = config.agent_spec(b.y_min, b.y_max);
  spec.policy.dropout_rate = 0.0;
  Rng rng(config.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, 0.5);

  tg::Tensor<double> zeta;
  if (spec.ip.param_count() > 0) {
    std::vector<double> z(static_cast<std::size_t>(spec.ip.param_count()));
    for (auto& v : z) v = nd(rng);
    zeta = tg::Tensor<double>::from({1, spec.ip.param_count()}, z, true);
  }
  const int rows = 4;
  auto make_input = [&](const tg::InputLayout& layout) {
    std::vector<double> x(static_cast<std::size_t>(rows * layout.total()));
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < layout.total(); ++c) {
        double v;
        if (c < layout.scan_width()) {
          const auto beam = static_cast<std::size_t>(c % layout.scan_len);
          v = b.y_min[beam] + (0.05 + 0.9 * u01(rng)) * (b.y_max[beam] - b.y_min[beam]);
        } else {
          v = 2.0 * u01(rng) - 1.0;
        }
        x[static_cast<std::size_t>(r * layout.total() + c)] = v;
      }
    }
    return tg::Tensor<double>::from({rows, layout.total()}, x);
  };

  tg::GradcheckOptions opt;
  opt.max_entries_per_tensor = max_entries;
  std::vector<GradcheckSummary> out;
  for (auto [name, net_spec] : {std::pair{"policy", spec.policy}, std::pair{"critic", spec.critic}}) {
    tg::Network<double> net(net_spec, rng);
    if (net_spec.input.scan_width() > 0) net.attach_ip(spec.ip, zeta);
    out.push_back({name, tg::gradcheck(net, make_input(net_spec.input), opt)});
  }
  return out;
}

}  // namespace lidarnav::harness
