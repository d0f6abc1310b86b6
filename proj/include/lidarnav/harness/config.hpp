#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "lidarnav/lidar_prep.hpp"
#include "lidarnav/nav_env.hpp"
#include "lidarnav/sac/agent.hpp"
#include "lidarnav/tinygrad/network.hpp"

namespace lidarnav::harness {

/// A named evaluation suite (tasks plus the map they run on).
struct Scenario {
  std::string name;
  std::string suite;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<std::string> train_maps;
  std::vector<Scenario> scenarios;
  NavConfig nav;
  IpFamily ip_family = IpFamily::IPAPRec;
  ParamSharing ip_sharing = ParamSharing::Shared;
  tg::ModelId model = tg::ModelId::Model0;
  /// Hidden width override for the preset; 0 keeps the preset widths.
  int width = 0;
  sac::SacConfig sac;
  int buffer_capacity = 100000;
  long total_steps = 100000;
  long eval_period = 5000;
  int random_episodes = 100;
  /// Gradient steps per environment step once the buffer holds a batch.
  int updates_per_step = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "runs/experiment";

  /// Input layout of the policy (pooled beams x frames + 4 goal/velocity terms).
  tg::InputLayout input_layout() const;
  /// IP layer for the given pooled per-beam bounds.
  tg::IpLayerConfig ip_layer(const std::vector<double>& y_min, const std::vector<double>& y_max) const;
  sac::AgentSpec agent_spec(const std::vector<double>& y_min, const std::vector<double>& y_max) const;

  /// Dimension and range checks that do not touch the filesystem.
  void validate() const;
  /// validate() plus existence of every referenced map and suite.
  void validate_files() const;
};

/// Reads the JSON schema documented in the README. Relative paths are
/// resolved against `base_dir`; unknown keys are errors.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = "");
ExperimentConfig load_config(const std::string& path);
/// Every resolved value, suitable for config_from_json.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

}  // namespace lidarnav::harness
