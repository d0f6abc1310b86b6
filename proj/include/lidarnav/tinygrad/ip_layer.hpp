#pragma once

#include <algorithm>
#include <vector>

#include "lidarnav/lidar_prep.hpp"
#include "lidarnav/tinygrad/tensor.hpp"

namespace lidarnav::tg {

/// Static description of the element-wise preprocessing applied to the scan
/// columns of a network input. Columns are `frames` stacked scans of length
/// `y_min.size()`; column j uses beam j % m.
struct IpLayerConfig {
  IpFamily family = IpFamily::Raw;
  ParamSharing sharing = ParamSharing::Shared;
  std::vector<double> y_min;
  std::vector<double> y_max;
  int frames = 1;

  int beams() const { return static_cast<int>(y_min.size()); }
  int width() const { return beams() * frames; }
  int param_count() const {
    if (!has_trainable_parameter(family)) return 0;
    return sharing == ParamSharing::Shared ? 1 : beams();
  }
};

/// Applies the IP family to `y` ([n, frames*m]) with raw parameters `zeta`
/// ([1, param_count], may be undefined for Raw/LNorm). Gradients flow to both
/// the distances and the raw parameters.
template <typename T>
Tensor<T> ip_transform(const Tensor<T>& y, const Tensor<T>& zeta, const IpLayerConfig& cfg) {
  const int m = cfg.beams();
  if (y.cols() != cfg.width()) throw std::invalid_argument("ip_transform: scan width mismatch");
  if (cfg.family == IpFamily::Raw) return y;
  const int params = cfg.param_count();
  if (params > 0 && (!zeta.defined() || zeta.size() != static_cast<std::size_t>(params))) {
    throw std::invalid_argument("ip_transform: parameter count mismatch");
  }

  const std::size_t total = y.size();
  const int cols = y.cols();
  std::vector<T> values(total);
  std::vector<T> dy(total);
  std::vector<T> draw(params > 0 ? total : 0);
  for (std::size_t i = 0; i < total; ++i) {
    const int beam = static_cast<int>(i % static_cast<std::size_t>(cols)) % m;
    const double raw =
        params > 0 ? static_cast<double>(zeta.data()[cfg.sharing == ParamSharing::Shared ? 0 : beam]) : 0.0;
    const double v = static_cast<double>(y.data()[i]);
    const double lo = cfg.y_min[static_cast<std::size_t>(beam)];
    const double hi = cfg.y_max[static_cast<std::size_t>(beam)];
    values[i] = static_cast<T>(ip_value(cfg.family, v, lo, hi, raw));
    dy[i] = static_cast<T>(ip_dvalue_dy(cfg.family, v, lo, hi, raw));
    if (params > 0) draw[i] = static_cast<T>(ip_dvalue_draw(cfg.family, v, lo, hi, raw));
  }

  std::vector<Tensor<T>> parents{y};
  if (params > 0) parents.push_back(zeta);
  Tensor<T> out = detail::make_result<T>(
      y.shape(), parents,
      [dy = std::move(dy), draw = std::move(draw), params, m, sharing = cfg.sharing](detail::Node<T>& self) {
        auto& py = *self.parents[0];
        if (py.requires_grad) {
          T* g = py.grad_data();
          for (std::size_t i = 0; i < dy.size(); ++i) g[i] += self.grad[i] * dy[i];
        }
        if (params == 0) return;
        auto& pz = *self.parents[1];
        if (!pz.requires_grad) return;
        T* g = pz.grad_data();
        const int width = self.shape.cols;
        for (std::size_t i = 0; i < draw.size(); ++i) {
          const int beam = static_cast<int>(i % static_cast<std::size_t>(width)) % m;
          g[sharing == ParamSharing::Shared ? 0 : beam] += self.grad[i] * draw[i];
        }
      });
  std::copy(values.begin(), values.end(), out.ptr());
  return out;
}

}  // namespace lidarnav::tg
