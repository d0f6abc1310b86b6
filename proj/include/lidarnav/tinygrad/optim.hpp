#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "lidarnav/tinygrad/network.hpp"

namespace lidarnav::tg {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm clip; 0 disables clipping.
  double clip_norm = 0.0;
};

/// Named trainable tensors with one Adam slot each. The same tensor may live
/// in several sets (shared IP parameters); every set keeps its own moments.
template <typename T>
class ParamSet {
 public:
  struct Slot {
    std::string name;
    Tensor<T> tensor;
    std::vector<double> m;
    std::vector<double> v;
  };

  explicit ParamSet(AdamOptions options = {}) : options_(options) {}

  void add(std::string name, Tensor<T> tensor) {
    for (const auto& s : slots_) {
      if (s.tensor.node() == tensor.node()) throw std::invalid_argument("tensor already in parameter set: " + name);
      if (s.name == name) throw std::invalid_argument("duplicate parameter name: " + name);
    }
    const std::size_t n = tensor.size();
    slots_.push_back({std::move(name), std::move(tensor), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)});
  }

  void add_all(const std::string& prefix, const std::vector<NamedTensor<T>>& params) {
    for (const auto& p : params) add(prefix + p.name, p.tensor);
  }

  void zero_grad() {
    for (auto& s : slots_) s.tensor.zero_grad();
  }

  double grad_norm() const {
    double total = 0.0;
    for (const auto& s : slots_) {
      for (T g : s.tensor.grad()) total += static_cast<double>(g) * static_cast<double>(g);
    }
    return std::sqrt(total);
  }

  /// One Adam update at learning rate `lr`. Gradients are read, never cleared.
  void step(double lr) {
    double factor = 1.0;
    if (options_.clip_norm > 0.0) {
      const double norm = grad_norm();
      if (norm > options_.clip_norm) factor = options_.clip_norm / norm;
    }
    ++step_count_;
    const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_count_));
    for (auto& s : slots_) {
      auto data = s.tensor.data();
      auto grad = s.tensor.grad();
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double g = factor * static_cast<double>(grad[i]);
        s.m[i] = options_.beta1 * s.m[i] + (1.0 - options_.beta1) * g;
        s.v[i] = options_.beta2 * s.v[i] + (1.0 - options_.beta2) * g * g;
        const double mhat = s.m[i] / bc1;
        const double vhat = s.v[i] / bc2;
        data[i] = static_cast<T>(static_cast<double>(data[i]) - lr * mhat / (std::sqrt(vhat) + options_.eps));
      }
    }
  }

  const std::vector<Slot>& slots() const { return slots_; }
  std::vector<Slot>& slots() { return slots_; }
  long step_count() const { return step_count_; }
  void set_step_count(long n) { step_count_ = n; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  std::vector<Slot> slots_;
  long step_count_ = 0;
};

template <typename T>
void optimizer_step(ParamSet<T>& params, double lr) {
  params.step(lr);
}

}  // namespace lidarnav::tg
