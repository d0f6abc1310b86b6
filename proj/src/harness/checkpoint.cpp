#include "lidarnav/harness/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace lidarnav::harness {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'L', 'N', 'A', 'V', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, const T* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
void take(std::istream& in, T* data, std::size_t n) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw std::runtime_error("checkpoint truncated");
}

std::vector<std::pair<std::string, tg::ParamSet<float>*>> optimizers(Agent& agent) {
  return {{"policy", &agent.policy_params}, {"critic", &agent.critic_params}};
}

}  // namespace

void write_checkpoint(std::ostream& out, const ExperimentConfig& config, const Agent& agent, long step,
                      long episodes) {
  auto& mut = const_cast<Agent&>(agent);  // slots() accessors only; nothing is modified
  json header;
  header["version"] = kCheckpointVersion;
  header["dtype"] = "float32";
  header["step"] = step;
  header["episodes"] = episodes;
  header["config"] = config_to_json(config);
  header["y_min"] = agent.spec().ip.y_min;
  header["y_max"] = agent.spec().ip.y_max;
  const auto tensors = agent.named_tensors();
  header["tensors"] = json::array();
  for (const auto& t : tensors) header["tensors"].push_back({{"name", t.name}, {"shape", {t.tensor.rows(), t.tensor.cols()}}});
  header["optimizers"] = json::array();
  for (auto& [name, set] : optimizers(mut)) {
    json slots = json::array();
    for (const auto& s : set->slots()) slots.push_back({{"name", s.name}, {"size", s.m.size()}});
    header["optimizers"].push_back({{"name", name}, {"step_count", set->step_count()}, {"slots", slots}});
  }
  const std::string text = header.dump();
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t version = kCheckpointVersion;
  put(out, &version, 1);
  const std::uint64_t len = text.size();
  put(out, &len, 1);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : tensors) put(out, t.tensor.data().data(), t.tensor.size());
  for (auto& [name, set] : optimizers(mut)) {
    for (const auto& s : set->slots()) {
      put(out, s.m.data(), s.m.size());
      put(out, s.v.data(), s.v.size());
    }
  }
  if (!out) throw std::runtime_error("checkpoint write failed");
}

void save_checkpoint(const std::string& path, const ExperimentConfig& config, const Agent& agent, long step,
                     long episodes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp);
    write_checkpoint(out, config, agent, step, episodes);
  }
  std::remove(path.c_str());
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw std::runtime_error("cannot move checkpoint into place: " + path);
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw std::runtime_error("not a checkpoint file");
  std::uint32_t version = 0;
  take(in, &version, 1);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  std::uint64_t len = 0;
  take(in, &len, 1);
  if (len > (1u << 30)) throw std::runtime_error("checkpoint header too large");
  std::string text(len, '\0');
  take(in, text.data(), len);
  json header;
  try {
    header = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("checkpoint header: ") + e.what());
  }
  if (header.at("dtype") != "float32") throw std::runtime_error("checkpoint dtype must be float32");

  Checkpoint ck;
  ck.config = config_from_json(header.at("config"));
  ck.step = header.at("step").get<long>();
  ck.episodes = header.at("episodes").get<long>();
  ck.y_min = header.at("y_min").get<std::vector<double>>();
  ck.y_max = header.at("y_max").get<std::vector<double>>();
  Rng init(0);
  ck.agent = std::make_unique<Agent>(ck.config.agent_spec(ck.y_min, ck.y_max), init);

  std::map<std::string, tg::Tensor<float>> by_name;
  for (const auto& t : ck.agent->named_tensors()) by_name.emplace(t.name, t.tensor);
  if (header.at("tensors").size() != by_name.size()) throw std::runtime_error("checkpoint tensor count mismatch");
  for (const auto& entry : header.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    auto it = by_name.find(name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint has unknown tensor " + name);
    auto shape = entry.at("shape").get<std::vector<int>>();
    if (shape.size() != 2 || shape[0] != it->second.rows() || shape[1] != it->second.cols()) {
      throw std::runtime_error("checkpoint tensor shape mismatch: " + name);
    }
    take(in, it->second.data().data(), it->second.size());
  }

  auto sets = optimizers(*ck.agent);
  const auto& opt = header.at("optimizers");
  if (opt.size() != sets.size()) throw std::runtime_error("checkpoint optimizer count mismatch");
  for (std::size_t k = 0; k < sets.size(); ++k) {
    auto& set = *sets[k].second;
    if (opt[k].at("name") != sets[k].first || opt[k].at("slots").size() != set.slots().size()) {
      throw std::runtime_error("checkpoint optimizer layout mismatch");
    }
    set.set_step_count(opt[k].at("step_count").get<long>());
    for (std::size_t i = 0; i < set.slots().size(); ++i) {
      auto& slot = set.slots()[i];
      if (opt[k]["slots"][i].at("name") != slot.name || opt[k]["slots"][i].at("size") != slot.m.size()) {
        throw std::runtime_error("checkpoint optimizer slot mismatch: " + slot.name);
      }
      take(in, slot.m.data(), slot.m.size());
      take(in, slot.v.data(), slot.v.size());
    }
  }
  return ck;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return read_checkpoint(in);
}

}  // namespace lidarnav::harness
