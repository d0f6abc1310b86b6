#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "lidarnav/rng.hpp"
#include "lidarnav/tinygrad/ip_layer.hpp"
#include "lidarnav/tinygrad/ops.hpp"

namespace lidarnav::tg {

enum class Activation { Identity, ReLU, LeakyReLU, Tanh };
enum class LayerKind { Dense, Conv1d };
enum class ModelId { Model0, Model1, Model2, Model3, Custom };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view s);
std::string_view to_string(LayerKind k);
LayerKind parse_layer_kind(std::string_view s);
std::string_view to_string(ModelId m);
ModelId parse_model_id(std::string_view s);

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int units = 0;  // dense width or conv output channels
  int kernel = 1;
  int stride = 1;
  Activation activation = Activation::ReLU;

  bool operator==(const LayerSpec&) const = default;
};

/// Input row layout: `frames` stacked scans of `scan_len` values, then
/// `extra` scalar features (goal, velocity and, for critics, the action).
struct InputLayout {
  int scan_len = 0;
  int frames = 1;
  int extra = 4;

  int scan_width() const { return scan_len * frames; }
  int total() const { return scan_width() + extra; }
  bool operator==(const InputLayout&) const = default;
};

/// Hidden layers followed by an implicit linear output layer of `output_dim`.
/// Conv1d layers must precede dense layers and see only the scan columns.
struct NetworkSpec {
  ModelId model = ModelId::Custom;
  std::vector<LayerSpec> layers;
  double dropout_rate = 0.0;
  double leaky_slope = 0.01;
  InputLayout input;
  int output_dim = 1;

  /// Default shapes for the four reference models. `width` > 0 overrides
  /// every dense hidden width.
  static NetworkSpec preset(ModelId model, InputLayout input, int output_dim, int width = 0);
  /// Throws std::invalid_argument if the layer shapes do not chain.
  void validate() const;
  bool operator==(const NetworkSpec&) const = default;
};

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::LeakyReLU: return "leaky_relu";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

inline Activation parse_activation(std::string_view s) {
  for (auto a : {Activation::Identity, Activation::ReLU, Activation::LeakyReLU, Activation::Tanh}) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown activation: " + std::string(s));
}

inline std::string_view to_string(LayerKind k) { return k == LayerKind::Dense ? "dense" : "conv1d"; }

inline LayerKind parse_layer_kind(std::string_view s) {
  if (s == "dense") return LayerKind::Dense;
  if (s == "conv1d") return LayerKind::Conv1d;
  throw std::invalid_argument("unknown layer kind: " + std::string(s));
}

inline std::string_view to_string(ModelId m) {
  switch (m) {
    case ModelId::Model0: return "Model_0";
    case ModelId::Model1: return "Model_1";
    case ModelId::Model2: return "Model_2";
    case ModelId::Model3: return "Model_3";
    case ModelId::Custom: return "custom";
  }
  return "?";
}

inline ModelId parse_model_id(std::string_view s) {
  for (auto m : {ModelId::Model0, ModelId::Model1, ModelId::Model2, ModelId::Model3, ModelId::Custom}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown model id: " + std::string(s));
}

inline NetworkSpec NetworkSpec::preset(ModelId model, InputLayout input, int output_dim, int width) {
  NetworkSpec spec;
  spec.model = model;
  spec.input = input;
  spec.output_dim = output_dim;
  auto dense = [&](int n, int default_width, Activation act) {
    for (int i = 0; i < n; ++i) {
      spec.layers.push_back({LayerKind::Dense, width > 0 ? width : default_width, 1, 1, act});
    }
  };
  switch (model) {
    case ModelId::Model0: dense(2, 256, Activation::ReLU); break;
    case ModelId::Model1: dense(3, 512, Activation::ReLU); break;
    case ModelId::Model2:
      spec.layers.push_back({LayerKind::Conv1d, 32, 5, 2, Activation::ReLU});
      spec.layers.push_back({LayerKind::Conv1d, 32, 3, 2, Activation::ReLU});
      dense(1, 256, Activation::ReLU);
      break;
    case ModelId::Model3:
      dense(4, 256, Activation::LeakyReLU);
      spec.dropout_rate = 0.1;
      break;
    case ModelId::Custom: break;
  }
  return spec;
}

inline void NetworkSpec::validate() const {
  if (input.scan_len < 0 || input.frames < 1 || input.extra < 0 || input.total() <= 0) {
    throw std::invalid_argument("network input layout is empty or negative");
  }
  if (output_dim < 1) throw std::invalid_argument("network output_dim must be positive");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0, 1)");
  if (model == ModelId::Model2 && input.frames != 3) {
    throw std::invalid_argument("Model_2 consumes three stacked scans");
  }
  bool seen_dense = false;
  int length = input.scan_len;
  for (const auto& layer : layers) {
    if (layer.units < 1) throw std::invalid_argument("layer width must be positive");
    if (layer.kind == LayerKind::Dense) {
      seen_dense = true;
      continue;
    }
    if (seen_dense) throw std::invalid_argument("conv1d layers must precede dense layers");
    if (layer.kernel < 1 || layer.stride < 1) throw std::invalid_argument("conv1d kernel/stride must be positive");
    if (length < layer.kernel) throw std::invalid_argument("conv1d input shorter than kernel");
    length = (length - layer.kernel) / layer.stride + 1;
  }
}

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
class Network {
 public:
  Network() = default;

  Network(NetworkSpec spec, Rng& rng) : spec_(std::move(spec)) {
    spec_.validate();
    int channels = spec_.input.frames;
    int length = spec_.input.scan_len;
    int width = 0;
    bool flattened = false;
    for (const auto& ls : spec_.layers) {
      Layer layer;
      layer.spec = ls;
      if (ls.kind == LayerKind::Conv1d) {
        layer.in_channels = channels;
        const int fan_in = channels * ls.kernel;
        layer.weight = init({ls.units, fan_in}, fan_in, rng);
        layer.bias = init({1, ls.units}, fan_in, rng);
        channels = ls.units;
        length = (length - ls.kernel) / ls.stride + 1;
      } else {
        if (!flattened) {
          width = channels * length + spec_.input.extra;
          flattened = true;
        }
        layer.weight = init({width, ls.units}, width, rng);
        layer.bias = init({1, ls.units}, width, rng);
        width = ls.units;
      }
      layers_.push_back(std::move(layer));
    }
    if (!flattened) width = channels * length + spec_.input.extra;
    output_.spec = {LayerKind::Dense, spec_.output_dim, 1, 1, Activation::Identity};
    output_.weight = init({width, spec_.output_dim}, width, rng);
    output_.bias = init({1, spec_.output_dim}, width, rng);
  }

  const NetworkSpec& spec() const { return spec_; }

  /// Routes the scan columns through an IP transform with raw parameters `zeta`.
  void attach_ip(IpLayerConfig cfg, Tensor<T> zeta) {
    if (cfg.width() != spec_.input.scan_width()) throw std::invalid_argument("IP layer width mismatch");
    if (cfg.param_count() > 0 && (!zeta.defined() || zeta.size() != static_cast<std::size_t>(cfg.param_count()))) {
      throw std::invalid_argument("IP parameter tensor has the wrong size");
    }
    ip_ = std::move(cfg);
    zeta_ = std::move(zeta);
    has_ip_ = true;
  }
  bool has_ip() const { return has_ip_; }
  const IpLayerConfig& ip_config() const { return ip_; }
  const Tensor<T>& zeta() const { return zeta_; }

  /// `rng` is only consulted for dropout in train mode.
  Tensor<T> forward(const Tensor<T>& input, bool train = false, Rng* rng = nullptr) const {
    if (input.cols() != spec_.input.total()) {
      throw std::invalid_argument("network input has " + std::to_string(input.cols()) +
                                  " columns, expected " + std::to_string(spec_.input.total()));
    }
    const bool dropout_on = train && spec_.dropout_rate > 0.0;
    if (dropout_on && rng == nullptr) throw std::invalid_argument("dropout in train mode needs an rng");

    const int scan_w = spec_.input.scan_width();
    Tensor<T> h;
    Tensor<T> extra;
    if (scan_w > 0) {
      h = scan_w == input.cols() ? input : slice_cols(input, 0, scan_w);
      if (has_ip_) h = ip_transform(h, zeta_, ip_);
    }
    if (spec_.input.extra > 0) extra = slice_cols(input, scan_w, spec_.input.extra);

    bool flattened = false;
    auto flatten = [&] {
      if (flattened) return;
      if (h.defined() && extra.defined()) {
        h = concat_cols<T>({h, extra});
      } else if (!h.defined()) {
        h = extra;
      }
      flattened = true;
    };
    for (const auto& layer : layers_) {
      if (layer.spec.kind == LayerKind::Conv1d) {
        h = conv1d(h, layer.weight, layer.bias, layer.in_channels, layer.spec.stride);
      } else {
        flatten();
        h = linear(h, layer.weight, layer.bias);
      }
      h = activate(h, layer.spec.activation);
      if (layer.spec.kind == LayerKind::Dense && dropout_on) h = dropout(h, spec_.dropout_rate, true, *rng);
    }
    flatten();
    return linear(h, output_.weight, output_.bias);
  }

  /// Weights and biases in layer order; the IP parameters are not included.
  std::vector<NamedTensor<T>> parameters() const {
    std::vector<NamedTensor<T>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const std::string prefix = std::string(to_string(layers_[i].spec.kind)) + std::to_string(i);
      out.push_back({prefix + ".weight", layers_[i].weight});
      out.push_back({prefix + ".bias", layers_[i].bias});
    }
    out.push_back({"output.weight", output_.weight});
    out.push_back({"output.bias", output_.bias});
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.tensor.size();
    return n;
  }

  /// Independent copy: fresh storage for every parameter. The IP attachment is
  /// not copied.
  template <typename U = T>
  Network<U> clone_as() const {
    Network<U> copy;
    copy.spec_ = spec_;
    auto convert = [](const Tensor<T>& t) {
      std::vector<U> v(t.data().begin(), t.data().end());
      return Tensor<U>::from(t.shape(), std::move(v), true);
    };
    for (const auto& layer : layers_) {
      typename Network<U>::Layer l;
      l.spec = layer.spec;
      l.in_channels = layer.in_channels;
      l.weight = convert(layer.weight);
      l.bias = convert(layer.bias);
      copy.layers_.push_back(std::move(l));
    }
    copy.output_.spec = output_.spec;
    copy.output_.weight = convert(output_.weight);
    copy.output_.bias = convert(output_.bias);
    return copy;
  }

  /// this <- tau * source + (1 - tau) * this, element-wise.
  void blend_from(const Network& source, double tau) {
    auto mine = parameters();
    auto theirs = source.parameters();
    if (mine.size() != theirs.size()) throw std::invalid_argument("blend_from: network mismatch");
    for (std::size_t i = 0; i < mine.size(); ++i) {
      auto dst = mine[i].tensor.data();
      auto src = theirs[i].tensor.data();
      if (dst.size() != src.size()) throw std::invalid_argument("blend_from: tensor size mismatch");
      const T a = static_cast<T>(tau);
      const T b = static_cast<T>(1.0 - tau);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = a * src[k] + b * dst[k];
    }
  }

 private:
  template <typename>
  friend class Network;

  struct Layer {
    LayerSpec spec;
    Tensor<T> weight;
    Tensor<T> bias;
    int in_channels = 0;
  };

  static Tensor<T> init(Shape shape, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<T> v(shape.numel());
    for (auto& x : v) x = static_cast<T>(dist(rng));
    return Tensor<T>::from(shape, std::move(v), true);
  }

  Tensor<T> activate(const Tensor<T>& x, Activation a) const {
    switch (a) {
      case Activation::Identity: return x;
      case Activation::ReLU: return relu(x);
      case Activation::LeakyReLU: return leaky_relu(x, static_cast<T>(spec_.leaky_slope));
      case Activation::Tanh: return tanh(x);
    }
    return x;
  }

  NetworkSpec spec_;
  std::vector<Layer> layers_;
  Layer output_;
  IpLayerConfig ip_;
  Tensor<T> zeta_;
  bool has_ip_ = false;
};

}  // namespace lidarnav::tg
