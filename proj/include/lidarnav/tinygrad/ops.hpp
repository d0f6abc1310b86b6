#pragma once

#include <Eigen/Core>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "lidarnav/tinygrad/tensor.hpp"

namespace lidarnav::tg {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

namespace detail {

template <typename T>
CMapR<T> value_map(const Node<T>& n) {
  return CMapR<T>(n.value.data(), n.shape.rows, n.shape.cols);
}

template <typename T>
MapR<T> grad_map(Node<T>& n) {
  return MapR<T>(n.grad_data(), n.shape.rows, n.shape.cols);
}

inline void require_same(Shape a, Shape b, const char* op) {
  if (!(a == b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + to_string(a) + " vs " +
                                to_string(b));
  }
}

// Element-wise map y = f(x) with dy/dx = df(x, y).
template <typename T, typename F, typename DF>
Tensor<T> unary(const Tensor<T>& x, F f, DF df) {
  auto out = make_result<T>(x.shape(), {x}, [df](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    if (!in.requires_grad) return;
    T* gx = in.grad_data();
    const T* gy = self.grad.data();
    for (std::size_t i = 0; i < self.value.size(); ++i) gx[i] += gy[i] * df(in.value[i], self.value[i]);
  });
  const T* xs = x.ptr();
  T* ys = out.ptr();
  for (std::size_t i = 0; i < x.size(); ++i) ys[i] = f(xs[i]);
  return out;
}

}  // namespace detail

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: shape mismatch " + to_string(a.shape()) + " x " +
                                to_string(b.shape()));
  }
  auto out = detail::make_result<T>({a.rows(), b.cols()}, {a, b}, [](detail::Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    CMapR<T> g(self.grad.data(), self.shape.rows, self.shape.cols);
    if (pa.requires_grad) detail::grad_map(pa).noalias() += g * detail::value_map(pb).transpose();
    if (pb.requires_grad) detail::grad_map(pb).noalias() += detail::value_map(pa).transpose() * g;
  });
  MapR<T>(out.ptr(), a.rows(), b.cols()).noalias() =
      CMapR<T>(a.ptr(), a.rows(), a.cols()) * CMapR<T>(b.ptr(), b.rows(), b.cols());
  return out;
}

/// x [n, in] * w [in, out] + b [1, out].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols()) {
    throw std::invalid_argument("linear: shape mismatch " + to_string(x.shape()) + " / " +
                                to_string(w.shape()) + " / " + to_string(b.shape()));
  }
  auto out = detail::make_result<T>({x.rows(), w.cols()}, {x, w, b}, [](detail::Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    auto& pb = *self.parents[2];
    CMapR<T> g(self.grad.data(), self.shape.rows, self.shape.cols);
    if (px.requires_grad) detail::grad_map(px).noalias() += g * detail::value_map(pw).transpose();
    if (pw.requires_grad) detail::grad_map(pw).noalias() += detail::value_map(px).transpose() * g;
    if (pb.requires_grad) detail::grad_map(pb) += g.colwise().sum();
  });
  MapR<T> y(out.ptr(), x.rows(), w.cols());
  y.noalias() = CMapR<T>(x.ptr(), x.rows(), x.cols()) * CMapR<T>(w.ptr(), w.rows(), w.cols());
  y.rowwise() += CMapR<T>(b.ptr(), 1, b.cols()).row(0);
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same(a.shape(), b.shape(), "add");
  auto out = detail::make_result<T>(a.shape(), {a, b}, [](detail::Node<T>& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      T* g = p->grad_data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
  for (std::size_t i = 0; i < a.size(); ++i) out.ptr()[i] = a.ptr()[i] + b.ptr()[i];
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same(a.shape(), b.shape(), "sub");
  auto out = detail::make_result<T>(a.shape(), {a, b}, [](detail::Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      T* g = pa.grad_data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      T* g = pb.grad_data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
  for (std::size_t i = 0; i < a.size(); ++i) out.ptr()[i] = a.ptr()[i] - b.ptr()[i];
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same(a.shape(), b.shape(), "mul");
  auto out = detail::make_result<T>(a.shape(), {a, b}, [](detail::Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      T* g = pa.grad_data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      T* g = pb.grad_data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
  for (std::size_t i = 0; i < a.size(); ++i) out.ptr()[i] = a.ptr()[i] * b.ptr()[i];
  return out;
}

/// Element-wise minimum; ties send the gradient to `a`.
template <typename T>
Tensor<T> minimum(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same(a.shape(), b.shape(), "minimum");
  auto out = detail::make_result<T>(a.shape(), {a, b}, [](detail::Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const bool take_a = pa.value[i] <= pb.value[i];
      if (take_a && pa.requires_grad) pa.grad_data()[i] += self.grad[i];
      if (!take_a && pb.requires_grad) pb.grad_data()[i] += self.grad[i];
    }
  });
  for (std::size_t i = 0; i < a.size(); ++i) out.ptr()[i] = std::min(a.ptr()[i], b.ptr()[i]);
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return detail::unary(
      x, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T c) {
  return detail::unary(
      x, [c](T v) { return v + c; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return detail::unary(
      x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  return detail::unary(
      x, [slope](T v) { return v > T(0) ? v : slope * v; },
      [slope](T v, T) { return v > T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return detail::unary(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& x) {
  return detail::unary(
      x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& x) {
  return detail::unary(
      x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <typename T>
Tensor<T> square(const Tensor<T>& x) {
  return detail::unary(
      x, [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

/// log(1 + e^x), evaluated without overflow.
template <typename T>
Tensor<T> softplus(const Tensor<T>& x) {
  return detail::unary(
      x,
      [](T v) { return v > T(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](T v, T) { return v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v)); });
}

/// Sum of all elements, [1, 1].
template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  auto out = detail::make_result<T>({1, 1}, {x}, [](detail::Node<T>& self) {
    auto& p = *self.parents[0];
    T* g = p.grad_data();
    const T gy = self.grad[0];
    for (std::size_t i = 0; i < p.value.size(); ++i) g[i] += gy;
  });
  T s = T(0);
  for (T v : x.data()) s += v;
  out.ptr()[0] = s;
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.size()));
}

/// Per-row sum, [n, 1].
template <typename T>
Tensor<T> row_sum(const Tensor<T>& x) {
  auto out = detail::make_result<T>({x.rows(), 1}, {x}, [](detail::Node<T>& self) {
    auto& p = *self.parents[0];
    detail::grad_map(p).colwise() += CMapR<T>(self.grad.data(), self.shape.rows, 1).col(0);
  });
  MapR<T>(out.ptr(), x.rows(), 1) = CMapR<T>(x.ptr(), x.rows(), x.cols()).rowwise().sum();
  return out;
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const int rows = parts.front().rows();
  int cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row count mismatch");
    cols += p.cols();
  }
  auto out = detail::make_result<T>({rows, cols}, parts, [](detail::Node<T>& self) {
    int offset = 0;
    CMapR<T> g(self.grad.data(), self.shape.rows, self.shape.cols);
    for (auto& p : self.parents) {
      const int c = p->shape.cols;
      if (p->requires_grad) detail::grad_map(*p) += g.middleCols(offset, c);
      offset += c;
    }
  });
  MapR<T> y(out.ptr(), rows, cols);
  int offset = 0;
  for (const auto& p : parts) {
    y.middleCols(offset, p.cols()) = CMapR<T>(p.ptr(), rows, p.cols());
    offset += p.cols();
  }
  return out;
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, int begin, int count) {
  if (begin < 0 || count <= 0 || begin + count > x.cols()) {
    throw std::invalid_argument("slice_cols: range outside " + to_string(x.shape()));
  }
  auto out = detail::make_result<T>({x.rows(), count}, {x}, [begin, count](detail::Node<T>& self) {
    auto& p = *self.parents[0];
    detail::grad_map(p).middleCols(begin, count) += CMapR<T>(self.grad.data(), self.shape.rows, count);
  });
  MapR<T>(out.ptr(), x.rows(), count) = CMapR<T>(x.ptr(), x.rows(), x.cols()).middleCols(begin, count);
  return out;
}

/// Multiplies by a fixed mask (already carrying the inverted-dropout scale).
template <typename T>
Tensor<T> apply_mask(const Tensor<T>& x, std::vector<T> mask) {
  if (mask.size() != x.size()) throw std::invalid_argument("apply_mask: mask size mismatch");
  auto out = detail::make_result<T>(x.shape(), {x}, [mask](detail::Node<T>& self) {
    auto& p = *self.parents[0];
    T* g = p.grad_data();
    for (std::size_t i = 0; i < mask.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
  for (std::size_t i = 0; i < x.size(); ++i) out.ptr()[i] = x.ptr()[i] * mask[i];
  return out;
}

/// Inverted dropout: zeroes each element with probability `rate` and scales
/// survivors by 1/(1-rate). Identity when `train` is false or rate is 0.
template <typename T, typename Rng>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool train, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0, 1)");
  if (!train || rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const T kept = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.size());
  for (auto& m : mask) m = keep(rng) ? kept : T(0);
  return apply_mask(x, std::move(mask));
}

/// Valid 1D cross-correlation.
///   x: [n, c_in * length] (channel-major per row)
///   w: [c_out, c_in * kernel]
///   b: [1, c_out]
/// Result: [n, c_out * out_len], out_len = (length - kernel) / stride + 1.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int in_channels,
                 int stride) {
  if (in_channels <= 0 || stride <= 0 || x.cols() % in_channels != 0) {
    throw std::invalid_argument("conv1d: input width not divisible by channel count");
  }
  const int length = x.cols() / in_channels;
  const int out_channels = w.rows();
  if (w.cols() % in_channels != 0) throw std::invalid_argument("conv1d: kernel shape mismatch");
  const int kernel = w.cols() / in_channels;
  if (kernel <= 0 || length < kernel) throw std::invalid_argument("conv1d: input shorter than kernel");
  if (b.rows() != 1 || b.cols() != out_channels) throw std::invalid_argument("conv1d: bias shape mismatch");
  const int out_len = (length - kernel) / stride + 1;
  const int n = x.rows();
  const int patch = in_channels * kernel;

  // Row (s * out_len + t) holds the receptive field of output position t of sample s.
  auto im2col = std::make_shared<MatR<T>>(static_cast<Eigen::Index>(n) * out_len, patch);
  for (int s = 0; s < n; ++s) {
    const T* xs = x.ptr() + static_cast<std::size_t>(s) * x.cols();
    for (int t = 0; t < out_len; ++t) {
      T* row = im2col->data() + (static_cast<std::size_t>(s) * out_len + t) * patch;
      for (int c = 0; c < in_channels; ++c) {
        const T* src = xs + static_cast<std::size_t>(c) * length + static_cast<std::size_t>(t) * stride;
        std::copy(src, src + kernel, row + static_cast<std::size_t>(c) * kernel);
      }
    }
  }

  auto out = detail::make_result<T>(
      {n, out_channels * out_len}, {x, w, b},
      [im2col, n, in_channels, length, kernel, stride, out_len, out_channels, patch](detail::Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        auto& pb = *self.parents[2];
        // Gather the output gradient into [n*out_len, c_out].
        MatR<T> g(static_cast<Eigen::Index>(n) * out_len, out_channels);
        for (int s = 0; s < n; ++s) {
          const T* gs = self.grad.data() + static_cast<std::size_t>(s) * out_channels * out_len;
          for (int o = 0; o < out_channels; ++o) {
            for (int t = 0; t < out_len; ++t) g(s * out_len + t, o) = gs[o * out_len + t];
          }
        }
        if (pw.requires_grad) detail::grad_map(pw).noalias() += g.transpose() * (*im2col);
        if (pb.requires_grad) detail::grad_map(pb) += g.colwise().sum();
        if (px.requires_grad) {
          MatR<T> gcol = g * detail::value_map(pw);  // [n*out_len, patch]
          T* gx = px.grad_data();
          for (int s = 0; s < n; ++s) {
            T* gxs = gx + static_cast<std::size_t>(s) * in_channels * length;
            for (int t = 0; t < out_len; ++t) {
              const T* row = gcol.data() + (static_cast<std::size_t>(s) * out_len + t) * patch;
              for (int c = 0; c < in_channels; ++c) {
                T* dst = gxs + static_cast<std::size_t>(c) * length + static_cast<std::size_t>(t) * stride;
                for (int k = 0; k < kernel; ++k) dst[k] += row[c * kernel + k];
              }
            }
          }
        }
      });

  MatR<T> y = (*im2col) * CMapR<T>(w.ptr(), out_channels, patch).transpose();
  y.rowwise() += CMapR<T>(b.ptr(), 1, out_channels).row(0);
  for (int s = 0; s < n; ++s) {
    T* ys = out.ptr() + static_cast<std::size_t>(s) * out_channels * out_len;
    for (int o = 0; o < out_channels; ++o) {
      for (int t = 0; t < out_len; ++t) ys[o * out_len + t] = y(s * out_len + t, o);
    }
  }
  return out;
}

}  // namespace lidarnav::tg
