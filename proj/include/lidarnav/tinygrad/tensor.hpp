#pragma once

// Reverse-mode automatic differentiation over rank-2 tensors.
//
// Every tensor is a [rows, cols] row-major block; batches run along rows.
// Operations record a closure that pushes the output gradient into their
// parents. Leaves created with requires_grad accumulate gradients across
// backward passes until zero_grad() is called.

#include <algorithm>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace lidarnav::tg {

struct Shape {
  int rows = 0;
  int cols = 0;

  std::size_t numel() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  bool operator==(const Shape&) const = default;
};

inline std::string to_string(Shape s) {
  return "[" + std::to_string(s.rows) + ", " + std::to_string(s.cols) + "]";
}

namespace detail {

/// Fixed 64-byte alignment so vectorized kernels sum in the same order
/// whatever the heap layout; keeps runs bitwise reproducible across processes.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <typename T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

template <typename T>
struct Node {
  Shape shape;
  Buffer<T> value;
  Buffer<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  T* grad_data() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad.data();
  }
};

}  // namespace detail

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

inline bool grad_enabled() { return detail::grad_mode(); }

/// Shared handle to a graph node. Copies alias the same storage.
template <typename T>
class Tensor {
 public:
  using Node = detail::Node<T>;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    auto node = std::make_shared<Node>();
    node->shape = shape;
    node->value.assign(shape.numel(), T(0));
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false) {
    if (values.size() != shape.numel()) {
      throw std::invalid_argument("tensor data does not match shape " + to_string(shape));
    }
    auto node = std::make_shared<Node>();
    node->shape = shape;
    node->value.assign(values.begin(), values.end());
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor scalar(T v, bool requires_grad = false) { return from({1, 1}, {v}, requires_grad); }

  bool defined() const { return node_ != nullptr; }
  Shape shape() const { return node_->shape; }
  int rows() const { return node_->shape.rows; }
  int cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return !node_->backward; }
  /// Freezes or unfreezes a leaf for graphs recorded from now on.
  void set_requires_grad(bool value) { node_->requires_grad = value; }

  std::span<T> data() { return node_->value; }
  std::span<const T> data() const { return node_->value; }
  T* ptr() { return node_->value.data(); }
  const T* ptr() const { return node_->value.data(); }
  T at(int r, int c) const { return node_->value[static_cast<std::size_t>(r) * cols() + c]; }
  T item() const {
    if (size() != 1) throw std::invalid_argument("item() needs a single-element tensor");
    return node_->value[0];
  }

  /// Gradient buffer (allocated on first access, zero-filled).
  std::span<T> grad() {
    node_->grad_data();
    return node_->grad;
  }
  std::span<const T> grad() const {
    node_->grad_data();
    return node_->grad;
  }
  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), T(0)); }

  /// Value copy with no graph history.
  Tensor detach() const { return from(shape(), node_->value, false); }

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

namespace detail {

/// Creates an op result. The backward closure is kept only if some parent
/// needs a gradient and recording is on.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<Tensor<T>> parents,
                      std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = shape;
  node->value.assign(shape.numel(), T(0));
  bool needs = false;
  if (grad_mode()) {
    for (const auto& p : parents) needs = needs || p.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

}  // namespace detail

/// Accumulates d(output)/d(leaf) into every leaf that requires a gradient.
template <typename T>
void backward(const Tensor<T>& output) {
  if (!output.defined() || output.size() != 1) {
    throw std::invalid_argument("backward requires a scalar output");
  }
  if (!output.requires_grad()) return;

  using Node = detail::Node<T>;
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{output.node(), 0}};
  visited.insert(output.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  output.node()->grad_data()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->backward) continue;
    node->grad_data();  // a child may have routed no gradient here (minimum)
    node->backward(*node);
  }
}

}  // namespace lidarnav::tg
