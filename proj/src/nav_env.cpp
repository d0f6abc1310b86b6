#include "lidarnav/nav_env.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace lidarnav {

void NavConfig::validate() const {
  body.validate();
  lidar.validate();
  if (pool_window < 1 || lidar.n_beams % pool_window != 0) throw std::invalid_argument("pool window mismatch");
  if (frames < 1) throw std::invalid_argument("frames must be at least 1");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (t_max < 1) throw std::invalid_argument("t_max must be at least 1");
  if (!(success_radius > 0.0)) throw std::invalid_argument("success_radius must be positive");
  if (limits.v_min > limits.v_max || limits.omega_max < 0.0) throw std::invalid_argument("invalid velocity limits");
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Running: return "running";
    case Outcome::Success: return "success";
    case Outcome::Crash: return "crash";
    case Outcome::Timeout: return "timeout";
  }
  return "?";
}

NavEnv::NavEnv(std::shared_ptr<const OccupancyGrid> map, NavConfig config)
    : map_(std::move(map)), config_(std::move(config)) {
  if (!map_) throw std::invalid_argument("NavEnv needs a map");
  const PooledScan pooled = pooled_bounds(config_);
  y_min_ = pooled.y_min;
  y_max_ = pooled.y_max;
}

PooledScan pooled_bounds(const NavConfig& config) {
  config.validate();
  LidarFrame bounds;
  for (double a : config.lidar.beam_angles()) {
    const double lo = footprint_min_range(config.body, a);
    bounds.ranges.push_back(lo);
    bounds.d_min.push_back(lo);
    bounds.d_max.push_back(config.lidar.max_range);
  }
  return min_pool(bounds, config.pool_window);
}

double NavEnv::goal_distance() const { return norm(task_.goal - state_.pose.position()); }

void NavEnv::goal_in_robot_frame(double& d, double& phi) const {
  const Vec2 rel = task_.goal - state_.pose.position();
  d = norm(rel);
  phi = wrap_angle(std::atan2(rel.y, rel.x) - state_.pose.theta);
}

PooledScan NavEnv::pooled_scan() const {
  const Vec2 mount = state_.pose.to_world(config_.body.lidar_offset);
  LidarFrame frame;
  if (!map_->contains(mount) || map_->occupied_at(mount)) {
    // only reachable after a crash: the sensor sits inside an obstacle
    for (double a : config_.lidar.beam_angles()) {
      const double lo = footprint_min_range(config_.body, a);
      frame.ranges.push_back(lo);
      frame.d_min.push_back(lo);
      frame.d_max.push_back(config_.lidar.max_range);
    }
  } else {
    frame = scan(*map_, state_.pose, config_.body, config_.lidar);
  }
  return min_pool(frame, config_.pool_window);
}

Observation NavEnv::rebuild_observation() const {
  Observation o = obs_;
  if (o.scans.empty()) throw std::logic_error("no episode in progress");
  o.scans.back() = pooled_scan();
  goal_in_robot_frame(o.d_goal, o.phi_goal);
  o.v = state_.v;
  o.omega = state_.omega;
  return o;
}

Observation NavEnv::reset(const NavTask& task) {
  validate_task(*map_, config_, task, false);
  task_ = task;
  state_ = DiffDriveState{task.start, 0.0, 0.0, config_.limits};
  t_ = 0;
  started_ = true;
  obs_ = Observation{};
  const PooledScan first = pooled_scan();
  for (int i = 0; i < config_.frames; ++i) obs_.scans.push_back(first);
  goal_in_robot_frame(obs_.d_goal, obs_.phi_goal);
  outcome_ = obs_.d_goal <= task_.success_radius ? Outcome::Success : Outcome::Running;
  return obs_;
}

StepResult NavEnv::step(double v_cmd, double omega_cmd) {
  if (!started_ || episode_over()) throw std::logic_error("step after episode end");
  const double before = goal_distance();
  state_ = step_kinematics(state_, v_cmd, omega_cmd, config_.dt);
  ++t_;
  const double after = goal_distance();

  StepResult r;
  r.dense_reward = config_.c1 * (before - after);
  if (collision_check(*map_, state_.pose, config_.body)) {
    r.outcome = Outcome::Crash;
    r.reward = config_.r_crash;
    r.done = 1;
  } else if (after <= task_.success_radius) {
    r.outcome = Outcome::Success;
    r.reward = config_.r_success;
    r.done = 1;
  } else {
    r.outcome = t_ >= config_.t_max ? Outcome::Timeout : Outcome::Running;
    r.reward = r.dense_reward;
  }
  outcome_ = r.outcome;

  obs_.scans.push_back(pooled_scan());
  while (static_cast<int>(obs_.scans.size()) > config_.frames) obs_.scans.pop_front();
  goal_in_robot_frame(obs_.d_goal, obs_.phi_goal);
  obs_.v = state_.v;
  obs_.omega = state_.omega;
  r.obs = obs_;
  return r;
}

std::vector<double> NavEnv::to_physical(const std::vector<double>& action) const {
  if (action.size() != 2) throw std::invalid_argument("navigation actions have two components");
  const double a0 = std::clamp(action[0], -1.0, 1.0);
  const double a1 = std::clamp(action[1], -1.0, 1.0);
  const auto& l = config_.limits;
  return {l.v_min + 0.5 * (a0 + 1.0) * (l.v_max - l.v_min), a1 * l.omega_max};
}

StepResult NavEnv::step_normalized(const std::vector<double>& action) {
  const auto cmd = to_physical(action);
  return step(cmd[0], cmd[1]);
}

std::vector<float> NavEnv::observation_vector(const Observation& obs) const {
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(obs_dim()));
  for (const auto& s : obs.scans) {
    for (double y : s.values) out.push_back(static_cast<float>(y));
  }
  const auto& l = config_.limits;
  const double v_bound = std::max(std::abs(l.v_min), std::abs(l.v_max));
  out.push_back(static_cast<float>(obs.d_goal / map_->diagonal_m()));
  out.push_back(static_cast<float>(obs.phi_goal));
  out.push_back(static_cast<float>(v_bound > 0 ? obs.v / v_bound : 0.0));
  out.push_back(static_cast<float>(l.omega_max > 0 ? obs.omega / l.omega_max : 0.0));
  return out;
}

void validate_task(const OccupancyGrid& map, const NavConfig& config, const NavTask& task, bool strict) {
  if (collision_check(map, task.start, config.body)) throw std::invalid_argument("colliding start");
  if (!map.contains(task.goal) || map.occupied_at(task.goal)) throw std::invalid_argument("goal in occupied space");
  if (!(task.success_radius > 0.0)) throw std::invalid_argument("success_radius must be positive");
  if (strict && norm(task.goal - task.start.position()) <= task.success_radius) {
    throw std::invalid_argument("start already within the success radius");
  }
}

NavTask sample_task(const OccupancyGrid& map, const NavConfig& config, Rng& rng, const std::string& map_id) {
  constexpr int kMaxDraws = 10000;
  const Vec2 o = map.origin();
  std::uniform_real_distribution<double> ux(o.x, o.x + map.width_m());
  std::uniform_real_distribution<double> uy(o.y, o.y + map.height_m());
  std::uniform_real_distribution<double> ut(-std::numbers::pi, std::numbers::pi);
  NavTask task;
  task.map_id = map_id;
  task.success_radius = config.success_radius;
  bool found = false;
  for (int i = 0; i < kMaxDraws && !found; ++i) {
    task.start = Pose{ux(rng), uy(rng), ut(rng)};
    found = !collision_check(map, task.start, config.body);
  }
  if (!found) throw std::runtime_error("no free start pose found in 10000 draws");

  // The goal must hold the robot in any orientation.
  const RobotBody disk{Circle{config.body.bounding_radius()}, {0.0, 0.0}};
  const double min_dist = std::max(config.success_radius, config.min_goal_distance);
  found = false;
  for (int i = 0; i < kMaxDraws && !found; ++i) {
    task.goal = Vec2{ux(rng), uy(rng)};
    found = norm(task.goal - task.start.position()) > min_dist &&
            !collision_check(map, Pose{task.goal.x, task.goal.y, 0.0}, disk);
  }
  if (!found) throw std::runtime_error("no free goal found in 10000 draws");
  return task;
}

EpisodeResult run_episode(NavEnv& env, const NavTask& task, EpisodeMode mode, Controller* controller, Rng& rng,
                          TransitionSink* sink) {
  if (mode != EpisodeMode::Random && controller == nullptr) throw std::invalid_argument("episode needs a controller");
  EpisodeResult result;
  Observation obs = env.reset(task);
  std::vector<float> x = env.observation_vector(obs);
  result.straight_line = norm(task.goal - task.start.position());
  const auto& s0 = env.state();
  result.trajectory.push_back({0, s0.pose.x, s0.pose.y, s0.pose.theta, s0.v, s0.omega, 0.0});
  if (env.episode_over()) {
    result.outcome = env.outcome();
    return result;
  }

  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  for (;;) {
    std::vector<double> a;
    if (mode == EpisodeMode::Random) {
      a = {uniform(rng), uniform(rng)};
    } else {
      a = controller->act(x, mode == EpisodeMode::Eval);
    }
    const Vec2 before = env.state().pose.position();
    const StepResult r = env.step_normalized(a);
    std::vector<float> x_next = env.observation_vector(r.obs);
    if (sink != nullptr && mode != EpisodeMode::Eval) {
      sac::Transition t;
      t.x = x;
      t.a.assign(a.begin(), a.end());
      for (auto& v : t.a) v = std::clamp(v, -1.0f, 1.0f);
      t.r = r.reward;
      t.x_next = x_next;
      t.d = r.done;
      sink->on_transition(t);
    }
    const auto& s = env.state();
    result.total_return += r.reward;
    result.dense_return += r.dense_reward;
    result.path_length += norm(s.pose.position() - before);
    result.trajectory.push_back({env.t(), s.pose.x, s.pose.y, s.pose.theta, s.v, s.omega, r.reward});
    x = std::move(x_next);
    if (r.outcome != Outcome::Running) {
      result.outcome = r.outcome;
      result.steps = env.t();
      return result;
    }
    if (sink != nullptr && mode != EpisodeMode::Eval && sink->stop_requested()) {
      result.outcome = Outcome::Running;
      result.steps = env.t();
      result.truncated = true;
      return result;
    }
  }
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  out << "step,x,y,theta,v,omega,reward\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.step << ',' << r.x << ',' << r.y << ',' << r.theta << ',' << r.v << ',' << r.omega << ',' << r.reward
        << '\n';
  }
}

TaskSuite parse_suite(std::istream& in) {
  TaskSuite suite;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    auto fail = [&] { throw std::invalid_argument("task suite line " + std::to_string(line_no) + ": malformed " + key); };
    if (key == "map") {
      if (!(ls >> suite.map)) fail();
    } else if (key == "success_radius") {
      if (!(ls >> suite.success_radius) || !(suite.success_radius > 0)) fail();
    } else if (key == "task") {
      NavTask t;
      if (!(ls >> t.start.x >> t.start.y >> t.start.theta >> t.goal.x >> t.goal.y)) fail();
      suite.tasks.push_back(t);
    } else {
      throw std::invalid_argument("task suite line " + std::to_string(line_no) + ": unknown directive " + key);
    }
  }
  for (auto& t : suite.tasks) {
    t.map_id = suite.map;
    t.success_radius = suite.success_radius;
  }
  return suite;
}

TaskSuite load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open task suite: " + path);
  TaskSuite suite = parse_suite(in);
  // map paths are relative to the suite file
  const std::filesystem::path map_path(suite.map);
  if (!suite.map.empty() && map_path.is_relative()) {
    suite.map = (std::filesystem::path(path).parent_path() / map_path).lexically_normal().string();
  }
  return suite;
}

void write_suite(std::ostream& out, const TaskSuite& suite) {
  if (!suite.map.empty()) out << "map " << suite.map << '\n';
  out << "success_radius " << suite.success_radius << '\n';
  out << std::setprecision(10);
  for (const auto& t : suite.tasks) {
    out << "task " << t.start.x << ' ' << t.start.y << ' ' << t.start.theta << ' ' << t.goal.x << ' ' << t.goal.y
        << '\n';
  }
}

TaskSuite make_suite(const OccupancyGrid& map, const NavConfig& config, int n, Rng& rng, const std::string& map_path) {
  TaskSuite suite;
  suite.map = map_path;
  suite.success_radius = config.success_radius;
  for (int i = 0; i < n; ++i) suite.tasks.push_back(sample_task(map, config, rng, map_path));
  return suite;
}

}  // namespace lidarnav
