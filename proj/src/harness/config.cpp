#include "lidarnav/harness/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>

namespace lidarnav::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Rejects keys nobody asked for, so typos fail loudly.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw std::invalid_argument(where_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(where_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) throw std::invalid_argument(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

}  // namespace

tg::InputLayout ExperimentConfig::input_layout() const {
  return tg::InputLayout{nav.pooled_beams(), nav.frames, 4};
}

tg::IpLayerConfig ExperimentConfig::ip_layer(const std::vector<double>& y_min, const std::vector<double>& y_max) const {
  tg::IpLayerConfig ip;
  ip.family = ip_family;
  ip.sharing = ip_sharing;
  ip.y_min = y_min;
  ip.y_max = y_max;
  ip.frames = nav.frames;
  return ip;
}

sac::AgentSpec ExperimentConfig::agent_spec(const std::vector<double>& y_min, const std::vector<double>& y_max) const {
  return sac::AgentSpec::make(model, input_layout(), 2, width, ip_layer(y_min, y_max), sac);
}

void ExperimentConfig::validate() const {
  nav.validate();
  if (nav.lidar.n_beams % nav.pool_window != 0) {
    throw std::invalid_argument("pool window does not divide the beam count");
  }
  if (width < 0) throw std::invalid_argument("network width must be non-negative");
  if (buffer_capacity < sac.batch_size) throw std::invalid_argument("replay capacity smaller than a batch");
  if (total_steps < 0) throw std::invalid_argument("total_steps must be non-negative");
  if (eval_period < 1) throw std::invalid_argument("eval_period must be positive");
  if (random_episodes < 0) throw std::invalid_argument("random_episodes must be non-negative");
  if (updates_per_step < 1) throw std::invalid_argument("updates_per_step must be positive");
  if (sac.gamma < 0.0 || sac.gamma > 1.0) throw std::invalid_argument("gamma must be in [0, 1]");
  if (sac.alpha < 0.0) throw std::invalid_argument("alpha must be non-negative");
  if (!(sac.lr_policy > 0.0) || !(sac.lr_critic > 0.0)) throw std::invalid_argument("learning rates must be positive");
  if (train_maps.empty()) throw std::invalid_argument("config lists no training maps");
  std::set<std::string> names;
  for (const auto& s : scenarios) {
    if (s.name.empty()) throw std::invalid_argument("scenario without a name");
    if (s.name.find_first_of(",/ \t\n") != std::string::npos) {
      throw std::invalid_argument("scenario name must not contain ',', '/' or spaces: " + s.name);
    }
    if (!names.insert(s.name).second) throw std::invalid_argument("duplicate scenario name: " + s.name);
  }
  // Builds the networks' shapes; throws on inconsistent dimensions.
  std::vector<double> lo(static_cast<std::size_t>(nav.pooled_beams()), 0.1);
  std::vector<double> hi(lo.size(), nav.lidar.max_range);
  agent_spec(lo, hi);
}

void ExperimentConfig::validate_files() const {
  validate();
  for (const auto& m : train_maps) {
    if (!fs::exists(m)) throw std::invalid_argument("missing map file: " + m);
  }
  for (const auto& s : scenarios) {
    if (!fs::exists(s.suite)) throw std::invalid_argument("missing suite file: " + s.suite);
  }
}

ExperimentConfig config_from_json(const json& j, const std::string& base_dir) {
  ExperimentConfig c;
  Reader top(j, "config");
  top.get("name", c.name);
  top.get("train_maps", c.train_maps);
  for (auto& m : c.train_maps) m = resolve(base_dir, m);
  if (const json* sc = top.child("scenarios")) {
    if (!sc->is_array()) throw std::invalid_argument("config.scenarios: expected an array");
    for (const auto& item : *sc) {
      Reader r(item, "config.scenarios[]");
      Scenario s;
      r.get("name", s.name);
      r.get("suite", s.suite);
      r.finish();
      s.suite = resolve(base_dir, s.suite);
      c.scenarios.push_back(s);
    }
  }
  if (const json* rb = top.child("robot")) {
    Reader r(*rb, "config.robot");
    std::string shape = "circle";
    double radius = 0.2;
    Rectangle rect;
    std::vector<double> offset{0.0, 0.0};
    r.get("shape", shape);
    r.get("radius", radius);
    r.get("length", rect.length);
    r.get("width", rect.width);
    r.get("lidar_offset", offset);
    r.finish();
    if (offset.size() != 2) throw std::invalid_argument("config.robot.lidar_offset: expected [x, y]");
    if (shape == "circle") {
      c.nav.body.shape = Circle{radius};
    } else if (shape == "rectangle") {
      c.nav.body.shape = rect;
    } else {
      throw std::invalid_argument("config.robot.shape: expected circle or rectangle");
    }
    c.nav.body.lidar_offset = {offset[0], offset[1]};
  }
  if (const json* li = top.child("lidar")) {
    Reader r(*li, "config.lidar");
    double fov_deg = c.nav.lidar.fov * 180.0 / std::numbers::pi;
    r.get("fov_deg", fov_deg);
    r.get("beams", c.nav.lidar.n_beams);
    r.get("max_range", c.nav.lidar.max_range);
    r.get("pool_window", c.nav.pool_window);
    r.get("frames", c.nav.frames);
    r.finish();
    c.nav.lidar.fov = fov_deg * std::numbers::pi / 180.0;
  }
  if (const json* ip = top.child("ip")) {
    Reader r(*ip, "config.ip");
    std::string family(to_string(c.ip_family));
    std::string sharing(to_string(c.ip_sharing));
    r.get("family", family);
    r.get("sharing", sharing);
    r.get("separate", c.sac.separate_zeta);
    r.finish();
    c.ip_family = parse_ip_family(family);
    c.ip_sharing = parse_param_sharing(sharing);
  }
  if (const json* net = top.child("network")) {
    Reader r(*net, "config.network");
    std::string model(tg::to_string(c.model));
    r.get("model", model);
    r.get("width", c.width);
    r.finish();
    c.model = tg::parse_model_id(model);
    if (c.model == tg::ModelId::Custom) throw std::invalid_argument("config.network.model: pick Model_0..Model_3");
  }
  if (const json* env = top.child("env")) {
    Reader r(*env, "config.env");
    r.get("dt", c.nav.dt);
    r.get("t_max", c.nav.t_max);
    r.get("v_min", c.nav.limits.v_min);
    r.get("v_max", c.nav.limits.v_max);
    r.get("omega_max", c.nav.limits.omega_max);
    r.get("c1", c.nav.c1);
    r.get("r_success", c.nav.r_success);
    r.get("r_crash", c.nav.r_crash);
    r.get("success_radius", c.nav.success_radius);
    r.get("min_goal_distance", c.nav.min_goal_distance);
    r.finish();
  }
  if (const json* s = top.child("sac")) {
    Reader r(*s, "config.sac");
    r.get("gamma", c.sac.gamma);
    r.get("alpha", c.sac.alpha);
    r.get("tau", c.sac.tau);
    r.get("lr_policy", c.sac.lr_policy);
    r.get("lr_critic", c.sac.lr_critic);
    r.get("batch_size", c.sac.batch_size);
    r.get("clip_norm", c.sac.clip_norm);
    r.get("log_std_min", c.sac.log_std_min);
    r.get("log_std_max", c.sac.log_std_max);
    r.get("buffer_capacity", c.buffer_capacity);
    r.get("total_steps", c.total_steps);
    r.get("eval_period", c.eval_period);
    r.get("random_episodes", c.random_episodes);
    r.get("updates_per_step", c.updates_per_step);
    r.finish();
  }
  top.get("seed", c.seed);
  top.get("out", c.out_dir);
  top.finish();
  c.out_dir = resolve(base_dir, c.out_dir);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  return config_from_json(j, fs::path(path).parent_path().string());
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["train_maps"] = c.train_maps;
  j["scenarios"] = json::array();
  for (const auto& s : c.scenarios) j["scenarios"].push_back({{"name", s.name}, {"suite", s.suite}});
  json robot;
  if (const auto* circle = std::get_if<Circle>(&c.nav.body.shape)) {
    robot["shape"] = "circle";
    robot["radius"] = circle->radius;
  } else {
    const auto& rect = std::get<Rectangle>(c.nav.body.shape);
    robot["shape"] = "rectangle";
    robot["length"] = rect.length;
    robot["width"] = rect.width;
  }
  robot["lidar_offset"] = {c.nav.body.lidar_offset.x, c.nav.body.lidar_offset.y};
  j["robot"] = robot;
  j["lidar"] = {{"fov_deg", c.nav.lidar.fov * 180.0 / std::numbers::pi},
                {"beams", c.nav.lidar.n_beams},
                {"max_range", c.nav.lidar.max_range},
                {"pool_window", c.nav.pool_window},
                {"frames", c.nav.frames}};
  j["ip"] = {{"family", std::string(to_string(c.ip_family))},
             {"sharing", std::string(to_string(c.ip_sharing))},
             {"separate", c.sac.separate_zeta}};
  j["network"] = {{"model", std::string(tg::to_string(c.model))}, {"width", c.width}};
  j["env"] = {{"dt", c.nav.dt},
              {"t_max", c.nav.t_max},
              {"v_min", c.nav.limits.v_min},
              {"v_max", c.nav.limits.v_max},
              {"omega_max", c.nav.limits.omega_max},
              {"c1", c.nav.c1},
              {"r_success", c.nav.r_success},
              {"r_crash", c.nav.r_crash},
              {"success_radius", c.nav.success_radius},
              {"min_goal_distance", c.nav.min_goal_distance}};
  j["sac"] = {{"gamma", c.sac.gamma},
              {"alpha", c.sac.alpha},
              {"tau", c.sac.tau},
              {"lr_policy", c.sac.lr_policy},
              {"lr_critic", c.sac.lr_critic},
              {"batch_size", c.sac.batch_size},
              {"clip_norm", c.sac.clip_norm},
              {"log_std_min", c.sac.log_std_min},
              {"log_std_max", c.sac.log_std_max},
              {"buffer_capacity", c.buffer_capacity},
              {"total_steps", c.total_steps},
              {"eval_period", c.eval_period},
              {"random_episodes", c.random_episodes},
              {"updates_per_step", c.updates_per_step}};
  j["seed"] = c.seed;
  j["out"] = c.out_dir;
  return j;
}

}  // namespace lidarnav::harness
