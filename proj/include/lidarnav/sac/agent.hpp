#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lidarnav/sac/replay.hpp"
#include "lidarnav/tinygrad/network.hpp"
#include "lidarnav/tinygrad/optim.hpp"

namespace lidarnav::sac {

struct SacConfig {
  double gamma = 0.99;
  double alpha = 0.01;
  double tau = 0.005;
  double lr_policy = 1e-4;
  double lr_critic = 1e-4;
  int batch_size = 100;
  double clip_norm = 10.0;
  double log_std_min = -5.0;
  double log_std_max = 2.0;
  /// Give the policy and the critics their own IP parameters instead of one shared set.
  bool separate_zeta = false;
};

/// Shapes of the policy and critic networks plus the IP layer they share.
/// The policy emits [mean, log-std] per action dimension; each critic reads
/// the observation followed by the normalized action.
struct AgentSpec {
  tg::NetworkSpec policy;
  tg::NetworkSpec critic;
  tg::IpLayerConfig ip;
  int act_dim = 2;
  SacConfig sac;

  static AgentSpec make(tg::ModelId model, tg::InputLayout obs, int act_dim, int width,
                        tg::IpLayerConfig ip, SacConfig sac) {
    AgentSpec s;
    s.policy = tg::NetworkSpec::preset(model, obs, 2 * act_dim, width);
    tg::InputLayout critic_in = obs;
    critic_in.extra += act_dim;
    s.critic = tg::NetworkSpec::preset(model, critic_in, 1, width);
    s.critic.dropout_rate = 0.0;
    s.ip = std::move(ip);
    s.act_dim = act_dim;
    s.sac = sac;
    s.validate();
    return s;
  }

  int obs_dim() const { return policy.input.total(); }

  void validate() const {
    policy.validate();
    critic.validate();
    if (act_dim < 1) throw std::invalid_argument("action dimension must be positive");
    if (policy.output_dim != 2 * act_dim) throw std::invalid_argument("policy must output mean and log-std per action");
    if (critic.output_dim != 1) throw std::invalid_argument("critic must output one value");
    if (critic.input.total() != policy.input.total() + act_dim) {
      throw std::invalid_argument("critic input must be the observation plus the action");
    }
    if (policy.input.scan_width() > 0 && ip.width() != policy.input.scan_width()) {
      throw std::invalid_argument("IP layer width does not match the scan columns");
    }
    if (sac.log_std_min >= sac.log_std_max) throw std::invalid_argument("log-std bounds are inverted");
    if (sac.tau <= 0.0 || sac.tau > 1.0) throw std::invalid_argument("tau must be in (0, 1]");
    if (sac.batch_size < 1) throw std::invalid_argument("batch size must be positive");
  }
};

/// Policy, twin critics, target critics and the IP parameters, with one
/// optimizer per side: policy over theta and zeta, critics over phi1, phi2
/// and zeta. Targets are never registered with an optimizer.
template <typename T>
class AgentBundle {
  // Declared first: the networks below are built from it.
  AgentSpec spec_;

 public:
  AgentBundle(AgentSpec spec, Rng& rng)
      : spec_(std::move(spec)),
        policy(spec_.policy, rng),
        critic1(spec_.critic, rng),
        critic2(spec_.critic, rng),
        policy_params(tg::AdamOptions{0.9, 0.999, 1e-8, spec_.sac.clip_norm}),
        critic_params(tg::AdamOptions{0.9, 0.999, 1e-8, spec_.sac.clip_norm}) {
    spec_.validate();
    target1 = critic1.template clone_as<T>();
    target2 = critic2.template clone_as<T>();
    for (auto* t : {&target1, &target2}) {
      for (auto& p : t->parameters()) p.tensor.set_requires_grad(false);
    }

    const int n_zeta = spec_.ip.param_count();
    if (n_zeta > 0) {
      zeta = tg::Tensor<T>::zeros({1, n_zeta}, true);
      zeta_critic = spec_.sac.separate_zeta ? tg::Tensor<T>::zeros({1, n_zeta}, true) : zeta;
      zeta_target = tg::Tensor<T>::zeros({1, n_zeta}, false);
    }
    if (spec_.policy.input.scan_width() > 0) {
      policy.attach_ip(spec_.ip, zeta);
      critic1.attach_ip(spec_.ip, zeta_critic);
      critic2.attach_ip(spec_.ip, zeta_critic);
      target1.attach_ip(spec_.ip, zeta_target);
      target2.attach_ip(spec_.ip, zeta_target);
    }

    policy_params.add_all("policy.", policy.parameters());
    critic_params.add_all("critic1.", critic1.parameters());
    critic_params.add_all("critic2.", critic2.parameters());
    if (n_zeta > 0) {
      policy_params.add("zeta", zeta);
      critic_params.add(spec_.sac.separate_zeta ? "zeta_critic" : "zeta", zeta_critic);
    }
  }

  AgentBundle(const AgentBundle&) = delete;
  AgentBundle& operator=(const AgentBundle&) = delete;

  const AgentSpec& spec() const { return spec_; }
  const SacConfig& config() const { return spec_.sac; }
  SacConfig& config() { return spec_.sac; }
  int act_dim() const { return spec_.act_dim; }
  int obs_dim() const { return spec_.obs_dim(); }

  /// Every stored tensor under a stable name (for checkpoints).
  std::vector<tg::NamedTensor<T>> named_tensors() const {
    std::vector<tg::NamedTensor<T>> out;
    auto add = [&](const std::string& prefix, const tg::Network<T>& net) {
      for (auto& p : net.parameters()) out.push_back({prefix + p.name, p.tensor});
    };
    add("policy.", policy);
    add("critic1.", critic1);
    add("critic2.", critic2);
    add("target1.", target1);
    add("target2.", target2);
    if (zeta.defined()) {
      out.push_back({"zeta", zeta});
      if (spec_.sac.separate_zeta) out.push_back({"zeta_critic", zeta_critic});
      out.push_back({"zeta_target", zeta_target});
    }
    return out;
  }

  void set_critics_trainable(bool value) {
    for (auto* net : {&critic1, &critic2}) {
      for (auto& p : net->parameters()) p.tensor.set_requires_grad(value);
    }
  }

  tg::Network<T> policy;
  tg::Network<T> critic1;
  tg::Network<T> critic2;
  tg::Network<T> target1;
  tg::Network<T> target2;
  tg::Tensor<T> zeta;
  tg::Tensor<T> zeta_critic;
  tg::Tensor<T> zeta_target;
  tg::ParamSet<T> policy_params;
  tg::ParamSet<T> critic_params;
};

template <typename T>
struct PolicyOutput {
  tg::Tensor<T> action;  // normalized, in (-1, 1)
  tg::Tensor<T> logp;    // [n, 1], density of the normalized action
  tg::Tensor<T> mean;
  tg::Tensor<T> log_std;
};

template <typename T>
tg::Tensor<T> gaussian_noise(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> nd;
  std::vector<T> v(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (auto& e : v) e = static_cast<T>(nd(rng));
  return tg::Tensor<T>::from({rows, cols}, std::move(v));
}

/// Tanh-squashed Gaussian from a [mean | raw log-std] head and fixed standard
/// normal `noise`. The log-std is squashed smoothly into [min, max].
template <typename T>
PolicyOutput<T> squash(const tg::Tensor<T>& head, const tg::Tensor<T>& noise, int act_dim, const SacConfig& cfg) {
  using namespace tg;
  if (head.cols() != 2 * act_dim) throw std::invalid_argument("policy head width mismatch");
  if (noise.shape() != Shape{head.rows(), act_dim}) throw std::invalid_argument("policy noise shape mismatch");
  PolicyOutput<T> out;
  out.mean = slice_cols(head, 0, act_dim);
  const T half_span = static_cast<T>(0.5 * (cfg.log_std_max - cfg.log_std_min));
  out.log_std = add_scalar(scale(add_scalar(tanh(slice_cols(head, act_dim, act_dim)), T(1)), half_span),
                           static_cast<T>(cfg.log_std_min));
  const Tensor<T> u = add(out.mean, mul(exp(out.log_std), noise));
  out.action = tanh(u);
  // log(1 - tanh(u)^2) written stably
  const Tensor<T> log_jac = scale(sub(add_scalar(scale(u, T(-1)), static_cast<T>(std::numbers::ln2)),
                                      softplus(scale(u, T(-2)))),
                                  T(2));
  std::vector<T> base(static_cast<std::size_t>(head.rows()), T(0));
  const double log_sqrt_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (int i = 0; i < head.rows(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < act_dim; ++j) {
      const double e = noise.at(i, j);
      acc += -0.5 * e * e - log_sqrt_2pi;
    }
    base[static_cast<std::size_t>(i)] = static_cast<T>(acc);
  }
  out.logp = add(row_sum(sub(scale(out.log_std, T(-1)), log_jac)),
                 Tensor<T>::from({head.rows(), 1}, std::move(base)));
  return out;
}

enum class NoiseMode { Sample, Deterministic };

/// Runs the policy on observations `x`. `rng` drives both the exploration
/// noise and dropout (train mode only). A caller-provided `noise` overrides sampling.
template <typename T>
PolicyOutput<T> policy_sample(const AgentBundle<T>& agent, const tg::Tensor<T>& x, bool train, Rng& rng,
                              NoiseMode mode = NoiseMode::Sample, const tg::Tensor<T>* noise = nullptr) {
  const int a = agent.act_dim();
  const tg::Tensor<T> head = agent.policy.forward(x, train, &rng);
  tg::Tensor<T> eps;
  if (noise != nullptr) {
    eps = *noise;
  } else if (mode == NoiseMode::Deterministic) {
    eps = tg::Tensor<T>::zeros({x.rows(), a});
  } else {
    eps = gaussian_noise<T>(x.rows(), a, rng);
  }
  return squash(head, eps, a, agent.config());
}

/// Normalized action for one observation, without recording a graph.
template <typename T>
std::vector<double> act(const AgentBundle<T>& agent, const std::vector<float>& obs, NoiseMode mode, Rng& rng) {
  tg::NoGradGuard guard;
  const int cols = static_cast<int>(obs.size());
  const auto x = tg::Tensor<T>::from({1, cols}, std::vector<T>(obs.begin(), obs.end()));
  const auto out = policy_sample(agent, x, false, rng, mode);
  return {out.action.data().begin(), out.action.data().end()};
}

template <typename T>
tg::Tensor<T> critic_input(const tg::Tensor<T>& x, const tg::Tensor<T>& a) {
  return tg::concat_cols<T>({x, a});
}

/// Bootstrapped target r + gamma (1 - d)(min_j Qhat_j(x', a') - alpha log pi(a'|x'))
/// with a' freshly sampled (or drawn from `noise`). Computed without a graph.
template <typename T>
tg::Tensor<T> critic_target(const AgentBundle<T>& agent, const Batch<T>& batch, Rng& rng,
                            const tg::Tensor<T>* noise = nullptr) {
  tg::NoGradGuard guard;
  const auto next = policy_sample(agent, batch.x_next, true, rng, NoiseMode::Sample, noise);
  const auto in = critic_input(batch.x_next, next.action);
  const auto q1 = agent.target1.forward(in);
  const auto q2 = agent.target2.forward(in);
  const auto& cfg = agent.config();
  std::vector<T> y(static_cast<std::size_t>(batch.size()));
  for (int i = 0; i < batch.size(); ++i) {
    const double q = std::min(static_cast<double>(q1.at(i, 0)), static_cast<double>(q2.at(i, 0)));
    const double soft = q - cfg.alpha * static_cast<double>(next.logp.at(i, 0));
    y[static_cast<std::size_t>(i)] =
        static_cast<T>(batch.r.at(i, 0) + cfg.gamma * (1.0 - static_cast<double>(batch.d.at(i, 0))) * soft);
  }
  return tg::Tensor<T>::from({batch.size(), 1}, std::move(y));
}

/// Sum of both critics' mean squared errors against `target`.
template <typename T>
tg::Tensor<T> critic_loss(const AgentBundle<T>& agent, const Batch<T>& batch, const tg::Tensor<T>& target) {
  const auto in = critic_input(batch.x, batch.a);
  const auto e1 = tg::sub(agent.critic1.forward(in), target);
  const auto e2 = tg::sub(agent.critic2.forward(in), target);
  return tg::add(tg::mean(tg::square(e1)), tg::mean(tg::square(e2)));
}

template <typename T>
double critic_update(AgentBundle<T>& agent, const Batch<T>& batch, Rng& rng) {
  const auto target = critic_target(agent, batch, rng);
  agent.critic_params.zero_grad();
  const auto loss = critic_loss(agent, batch, target);
  tg::backward(loss);
  agent.critic_params.step(agent.config().lr_critic);
  return static_cast<double>(loss.item());
}

/// mean(alpha log pi(a|x) - Q(x, a)) with reparameterized a. `q` defaults to
/// the minimum of the two critics.
template <typename T>
tg::Tensor<T> policy_loss(
    const AgentBundle<T>& agent, const tg::Tensor<T>& x, bool train, Rng& rng, const tg::Tensor<T>* noise = nullptr,
    const std::function<tg::Tensor<T>(const tg::Tensor<T>&, const tg::Tensor<T>&)>& q = nullptr) {
  const auto pi = policy_sample(agent, x, train, rng, NoiseMode::Sample, noise);
  tg::Tensor<T> qv;
  if (q) {
    qv = q(x, pi.action);
  } else {
    const auto in = critic_input(x, pi.action);
    qv = tg::minimum(agent.critic1.forward(in), agent.critic2.forward(in));
  }
  return tg::mean(tg::sub(tg::scale(pi.logp, static_cast<T>(agent.config().alpha)), qv));
}

template <typename T>
double policy_update(AgentBundle<T>& agent, const Batch<T>& batch, Rng& rng) {
  // Critic weights stay out of this graph; gradient still reaches zeta
  // through the critics' IP layer when it is shared.
  agent.set_critics_trainable(false);
  agent.policy_params.zero_grad();
  tg::Tensor<T> loss;
  try {
    loss = policy_loss(agent, batch.x, true, rng);
  } catch (...) {
    agent.set_critics_trainable(true);
    throw;
  }
  agent.set_critics_trainable(true);
  tg::backward(loss);
  agent.policy_params.step(agent.config().lr_policy);
  return static_cast<double>(loss.item());
}

/// targets <- tau * critics + (1 - tau) * targets, including the IP parameters.
template <typename T>
void polyak_update(AgentBundle<T>& agent, double tau) {
  if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("tau must be in (0, 1]");
  agent.target1.blend_from(agent.critic1, tau);
  agent.target2.blend_from(agent.critic2, tau);
  if (agent.zeta_target.defined()) {
    auto dst = agent.zeta_target.data();
    auto src = agent.zeta_critic.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = static_cast<T>(tau * static_cast<double>(src[i]) + (1.0 - tau) * static_cast<double>(dst[i]));
    }
  }
}

struct UpdateStats {
  double critic_loss = 0.0;
  double policy_loss = 0.0;
};

/// One training step: critic update, then policy update, then target averaging.
template <typename T>
UpdateStats update_block(AgentBundle<T>& agent, const ReplayBuffer& buffer, Rng& sample_rng, Rng& noise_rng) {
  const auto batch = buffer.sample<T>(static_cast<std::size_t>(agent.config().batch_size), sample_rng);
  UpdateStats s;
  s.critic_loss = critic_update(agent, batch, noise_rng);
  s.policy_loss = policy_update(agent, batch, noise_rng);
  polyak_update(agent, agent.config().tau);
  return s;
}

}  // namespace lidarnav::sac
