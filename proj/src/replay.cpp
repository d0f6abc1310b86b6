#include "lidarnav/sac/replay.hpp"

#include <cmath>
#include <stdexcept>

namespace lidarnav::sac {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
  if (capacity == 0 || obs_dim <= 0 || act_dim <= 0) throw std::invalid_argument("replay buffer dimensions must be positive");
  obs_.resize(capacity * static_cast<std::size_t>(obs_dim));
  next_obs_.resize(obs_.size());
  act_.resize(capacity * static_cast<std::size_t>(act_dim));
  rew_.resize(capacity);
  done_.resize(capacity);
}

void ReplayBuffer::push(const Transition& t) {
  if (t.x.size() != static_cast<std::size_t>(obs_dim_) || t.x_next.size() != t.x.size() ||
      t.a.size() != static_cast<std::size_t>(act_dim_)) {
    throw std::invalid_argument("transition dimensions do not match the replay buffer");
  }
  if (t.d != 0 && t.d != 1) throw std::invalid_argument("termination flag must be 0 or 1");
  if (!std::isfinite(t.r)) throw std::invalid_argument("non-finite reward");
  const std::size_t slot = head_;
  std::copy(t.x.begin(), t.x.end(), obs_.begin() + static_cast<std::ptrdiff_t>(slot * obs_dim_));
  std::copy(t.x_next.begin(), t.x_next.end(), next_obs_.begin() + static_cast<std::ptrdiff_t>(slot * obs_dim_));
  std::copy(t.a.begin(), t.a.end(), act_.begin() + static_cast<std::ptrdiff_t>(slot * act_dim_));
  rew_[slot] = t.r;
  done_[slot] = static_cast<std::uint8_t>(t.d);
  head_ = (head_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay index out of range");
  const std::size_t slot = physical(i);
  Transition t;
  const auto o = static_cast<std::ptrdiff_t>(slot * obs_dim_);
  const auto a = static_cast<std::ptrdiff_t>(slot * act_dim_);
  t.x.assign(obs_.begin() + o, obs_.begin() + o + obs_dim_);
  t.x_next.assign(next_obs_.begin() + o, next_obs_.begin() + o + obs_dim_);
  t.a.assign(act_.begin() + a, act_.begin() + a + act_dim_);
  t.r = rew_[slot];
  t.d = done_[slot];
  return t;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (size_ == 0) throw std::logic_error("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = pick(rng);
  return out;
}

}  // namespace lidarnav::sac
