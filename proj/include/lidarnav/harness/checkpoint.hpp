#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "lidarnav/harness/config.hpp"
#include "lidarnav/sac/agent.hpp"

namespace lidarnav::harness {

using Agent = sac::AgentBundle<float>;

/// Binary layout (little-endian):
///   8 bytes  magic "LNAVCKPT"
///   u32      format version
///   u64      header length H
///   H bytes  JSON header: config, step, episodes, bounds, tensor and optimizer tables
///   float32  tensor values in header order
///   float64  Adam first then second moments per optimizer slot, in header order
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ExperimentConfig config;
  long step = 0;
  long episodes = 0;
  std::vector<double> y_min;
  std::vector<double> y_max;
  std::unique_ptr<Agent> agent;
};

void write_checkpoint(std::ostream& out, const ExperimentConfig& config, const Agent& agent, long step, long episodes);
void save_checkpoint(const std::string& path, const ExperimentConfig& config, const Agent& agent, long step,
                     long episodes);

/// Rebuilds the agent from the embedded config and restores every tensor and
/// optimizer moment. Throws std::runtime_error on a corrupt or foreign file.
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lidarnav::harness
