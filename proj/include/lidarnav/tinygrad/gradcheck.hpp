#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "lidarnav/tinygrad/network.hpp"

namespace lidarnav::tg {

struct GradcheckOptions {
  double step = 1e-5;
  /// Gradients smaller than this are compared on an absolute scale.
  double floor = 1e-6;
  /// 0 checks every element; otherwise a seeded sample per tensor.
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 7;
};

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t checked = 0;
};

/// Compares backward() against central differences of `loss_fn` for every
/// listed parameter.
inline GradcheckResult gradcheck(const std::function<Tensor<double>()>& loss_fn,
                                 std::vector<NamedTensor<double>> params,
                                 const GradcheckOptions& options = {}) {
  for (auto& p : params) p.tensor.zero_grad();
  backward(loss_fn());

  GradcheckResult result;
  Rng rng(options.seed);
  for (auto& p : params) {
    auto data = p.tensor.data();
    std::vector<double> analytic(p.tensor.grad().begin(), p.tensor.grad().end());
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (options.max_entries_per_tensor > 0 && idx.size() > options.max_entries_per_tensor) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(options.max_entries_per_tensor);
    }
    for (std::size_t i : idx) {
      const double saved = data[i];
      data[i] = saved + options.step;
      const double up = loss_fn().item();
      data[i] = saved - options.step;
      const double down = loss_fn().item();
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), options.floor});
      const double rel = std::abs(numeric - analytic[i]) / denom;
      ++result.checked;
      if (rel > result.max_rel_error || !std::isfinite(rel)) {
        result.max_rel_error = std::isfinite(rel) ? rel : INFINITY;
        result.worst_parameter = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

/// Gradcheck of a network on a fixed input: the scalar loss is a fixed random
/// projection of the output. Covers the attached IP parameters as well.
inline GradcheckResult gradcheck(const Network<double>& net, const Tensor<double>& input,
                                 const GradcheckOptions& options = {}) {
  Rng rng(options.seed + 1);
  std::normal_distribution<double> nd;
  const Shape out_shape{input.rows(), net.spec().output_dim};
  std::vector<double> proj(out_shape.numel());
  for (auto& v : proj) v = nd(rng);
  const auto projection = Tensor<double>::from(out_shape, proj);
  auto params = net.parameters();
  if (net.has_ip() && net.zeta().defined()) params.push_back({"ip.zeta", net.zeta()});
  return gradcheck([&] { return sum(mul(net.forward(input, false, nullptr), projection)); }, params,
                   options);
}

}  // namespace lidarnav::tg
