#pragma once

#include <deque>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "lidarnav/gridworld.hpp"
#include "lidarnav/lidar_prep.hpp"
#include "lidarnav/rng.hpp"
#include "lidarnav/sac/replay.hpp"

namespace lidarnav {

struct NavConfig {
  RobotBody body{Circle{0.2}, {0.0, 0.0}};
  LidarSpec lidar;
  int pool_window = 1;
  /// Stacked scans per observation (3 for Model_2).
  int frames = 1;
  VelocityLimits limits{0.0, 0.5, std::numbers::pi / 2.0};
  double dt = 0.2;
  int t_max = 200;
  double c1 = 2.0;
  double r_success = 10.0;
  double r_crash = -10.0;
  double success_radius = 0.3;
  /// Sampled tasks keep at least this start-goal distance (and always more
  /// than the success radius).
  double min_goal_distance = 0.0;

  int pooled_beams() const { return lidar.n_beams / pool_window; }
  void validate() const;
};

/// Per-beam pooled [y_min, y_max] implied by the body and lidar (values = y_min).
PooledScan pooled_bounds(const NavConfig& config);

struct NavTask {
  std::string map_id;
  Pose start;
  Vec2 goal;
  double success_radius = 0.3;
};

/// Robot-centric view of one state. The scan history holds pooled distances,
/// oldest first; the IP mapping happens inside the networks.
struct Observation {
  std::deque<PooledScan> scans;
  double d_goal = 0.0;
  double phi_goal = 0.0;
  double v = 0.0;
  double omega = 0.0;

  const PooledScan& latest() const { return scans.back(); }
};

enum class Outcome { Running, Success, Crash, Timeout };
std::string_view to_string(Outcome o);

struct StepResult {
  Observation obs;
  double reward = 0.0;
  /// Termination flag stored with the transition: 1 for success or crash.
  int done = 0;
  Outcome outcome = Outcome::Running;
  /// c1 (d_t - d_{t+1}) for this step, whether or not it was paid out.
  double dense_reward = 0.0;
};

class NavEnv {
 public:
  NavEnv(std::shared_ptr<const OccupancyGrid> map, NavConfig config);

  /// Places the robot at the task start at rest. A start that already lies
  /// within the success radius ends the episode immediately with Success.
  Observation reset(const NavTask& task);
  /// Physical command; clamped to the velocity limits before integration.
  StepResult step(double v_cmd, double omega_cmd);
  /// Normalized command in [-1, 1]^2.
  StepResult step_normalized(const std::vector<double>& action);

  /// Rebuilds the observation of the current state (scan history included).
  Observation observe() const { return obs_; }
  Observation rebuild_observation() const;
  /// Network input: stacked scans, then d_g / diagonal, phi_g, v / v_bound, omega / omega_max.
  std::vector<float> observation_vector(const Observation& obs) const;
  int obs_dim() const { return config_.pooled_beams() * config_.frames + 4; }

  std::vector<double> to_physical(const std::vector<double>& action) const;

  const NavConfig& config() const { return config_; }
  const OccupancyGrid& map() const { return *map_; }
  std::shared_ptr<const OccupancyGrid> map_ptr() const { return map_; }
  const DiffDriveState& state() const { return state_; }
  const NavTask& task() const { return task_; }
  int t() const { return t_; }
  Outcome outcome() const { return outcome_; }
  bool episode_over() const { return outcome_ != Outcome::Running; }
  double goal_distance() const;

  /// Per-beam pooled bounds (identical for every step).
  const std::vector<double>& y_min() const { return y_min_; }
  const std::vector<double>& y_max() const { return y_max_; }

 private:
  PooledScan pooled_scan() const;
  void goal_in_robot_frame(double& d, double& phi) const;

  std::shared_ptr<const OccupancyGrid> map_;
  NavConfig config_;
  std::vector<double> y_min_;
  std::vector<double> y_max_;
  NavTask task_;
  DiffDriveState state_;
  Observation obs_;
  int t_ = 0;
  Outcome outcome_ = Outcome::Timeout;
  bool started_ = false;
};

/// Collision-free start pose and goal point by rejection sampling.
/// Throws std::runtime_error after 10^4 failed draws.
NavTask sample_task(const OccupancyGrid& map, const NavConfig& config, Rng& rng, const std::string& map_id = "");

/// Throws std::invalid_argument on a colliding start or a goal cell that is
/// occupied. `strict` also requires start-goal distance > success radius.
void validate_task(const OccupancyGrid& map, const NavConfig& config, const NavTask& task, bool strict);

/// Chooses normalized actions in [-1, 1]^2.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::vector<double> act(const std::vector<float>& obs, bool deterministic) = 0;
};

/// Receives every transition of train and random episodes.
class TransitionSink {
 public:
  virtual ~TransitionSink() = default;
  virtual void on_transition(const sac::Transition& t) = 0;
  /// Checked after every transition; true cuts the episode short.
  virtual bool stop_requested() const { return false; }
};

enum class EpisodeMode { Train, Eval, Random };

struct TrajectoryRow {
  int step = 0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;
  double omega = 0.0;
  double reward = 0.0;
};

struct EpisodeResult {
  Outcome outcome = Outcome::Timeout;
  int steps = 0;
  double total_return = 0.0;
  double dense_return = 0.0;
  double path_length = 0.0;
  double straight_line = 0.0;
  /// Cut short by the sink; outcome stays Running.
  bool truncated = false;
  std::vector<TrajectoryRow> trajectory;
};

/// Runs one episode. Random mode never consults `controller` (may be null);
/// Train and Random modes hand every transition to `sink` when given.
EpisodeResult run_episode(NavEnv& env, const NavTask& task, EpisodeMode mode, Controller* controller, Rng& rng,
                          TransitionSink* sink = nullptr);

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);

/// Reproducible evaluation tasks. Text format, one directive per line:
///   map <path>
///   success_radius <m>
///   task <start_x> <start_y> <start_theta> <goal_x> <goal_y>
struct TaskSuite {
  std::string map;
  double success_radius = 0.3;
  std::vector<NavTask> tasks;
};

TaskSuite parse_suite(std::istream& in);
TaskSuite load_suite(const std::string& path);
void write_suite(std::ostream& out, const TaskSuite& suite);
TaskSuite make_suite(const OccupancyGrid& map, const NavConfig& config, int n, Rng& rng, const std::string& map_path);

}  // namespace lidarnav
