#pragma once

#include <cstddef>
#include <vector>

#include "lidarnav/rng.hpp"
#include "lidarnav/tinygrad/tensor.hpp"

namespace lidarnav::sac {

/// One environment interaction. `a` is the normalized action in [-1, 1]^A.
struct Transition {
  std::vector<float> x;
  std::vector<float> a;
  double r = 0.0;
  std::vector<float> x_next;
  int d = 0;
};

/// Column-stacked mini-batch, one row per sampled transition.
template <typename T>
struct Batch {
  tg::Tensor<T> x;
  tg::Tensor<T> a;
  tg::Tensor<T> r;
  tg::Tensor<T> x_next;
  tg::Tensor<T> d;

  int size() const { return x.rows(); }
};

/// Fixed-capacity FIFO ring. Sampling is uniform with replacement.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim);

  void push(const Transition& t);
  Transition at(std::size_t i) const;
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

  template <typename T>
  Batch<T> sample(std::size_t n, Rng& rng) const {
    return gather<T>(sample_indices(n, rng));
  }

  template <typename T>
  Batch<T> gather(const std::vector<std::size_t>& rows) const {
    const int n = static_cast<int>(rows.size());
    std::vector<T> x, a, r, xn, d;
    x.reserve(rows.size() * static_cast<std::size_t>(obs_dim_));
    xn.reserve(x.capacity());
    a.reserve(rows.size() * static_cast<std::size_t>(act_dim_));
    for (std::size_t i : rows) {
      const std::size_t slot = physical(i);
      const float* xo = &obs_[slot * static_cast<std::size_t>(obs_dim_)];
      const float* xno = &next_obs_[slot * static_cast<std::size_t>(obs_dim_)];
      const float* ao = &act_[slot * static_cast<std::size_t>(act_dim_)];
      x.insert(x.end(), xo, xo + obs_dim_);
      xn.insert(xn.end(), xno, xno + obs_dim_);
      a.insert(a.end(), ao, ao + act_dim_);
      r.push_back(static_cast<T>(rew_[slot]));
      d.push_back(static_cast<T>(done_[slot]));
    }
    Batch<T> b;
    b.x = tg::Tensor<T>::from({n, obs_dim_}, std::move(x));
    b.x_next = tg::Tensor<T>::from({n, obs_dim_}, std::move(xn));
    b.a = tg::Tensor<T>::from({n, act_dim_}, std::move(a));
    b.r = tg::Tensor<T>::from({n, 1}, std::move(r));
    b.d = tg::Tensor<T>::from({n, 1}, std::move(d));
    return b;
  }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }

 private:
  /// Logical index 0 is the oldest stored transition.
  std::size_t physical(std::size_t i) const { return (head_ + capacity_ - size_ + i) % capacity_; }

  std::size_t capacity_;
  int obs_dim_;
  int act_dim_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::vector<float> obs_;
  std::vector<float> next_obs_;
  std::vector<float> act_;
  std::vector<double> rew_;
  std::vector<std::uint8_t> done_;
};

}  // namespace lidarnav::sac
