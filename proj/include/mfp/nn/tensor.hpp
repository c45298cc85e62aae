#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfp::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape) noexcept;
std::string to_string(const Shape& shape);

/// Raised for shape/contract violations inside the engine.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a forward or backward pass produces NaN/Inf.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Whether op results currently record a backward graph (per thread).
bool grad_enabled() noexcept;

/// Disables graph recording on this thread for its lifetime (inference).
class NoGradGuard {
public:
  NoGradGuard() noexcept;
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
  bool previous_;
};

namespace detail {

template <class T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad; // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::span<T> grad_buffer() {
    if (grad.empty()) {
      grad.assign(data.size(), T(0));
    }
    return grad;
  }
};

} // namespace detail

/// N-dimensional row-major array with an optional reverse-mode gradient.
///
/// Tensor is a shared handle: copies alias the same storage. Operations in
/// ops.hpp record a backward closure on their result whenever any input
/// requires a gradient; calling backward() on a scalar result propagates
/// gradients to every reachable leaf.
template <class T>
class Tensor {
public:
  using value_type = T;
  using BackwardFn = std::function<void(detail::Node<T>&)>;

  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor scalar(T value, bool requires_grad = false) {
    return Tensor(Shape{}, std::vector<T>{value}, requires_grad);
  }

  bool defined() const noexcept { return impl_ != nullptr; }

  const Shape& shape() const { return node().shape; }
  std::size_t rank() const { return node().shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node().data.size(); }

  std::span<T> data() { return node().data; }
  std::span<const T> data() const { return node().data; }
  T item() const;

  bool requires_grad() const { return node().requires_grad; }
  void set_requires_grad(bool flag) { node().requires_grad = flag; }

  bool has_grad() const { return !node().grad.empty(); }
  std::span<T> grad() { return node().grad; }
  std::span<const T> grad() const { return node().grad; }
  /// Resets the gradient to an allocated all-zero buffer.
  void zero_grad();

  /// Reverse-mode sweep from this scalar; gradients accumulate into leaves.
  void backward();

  /// Same values, no graph, no gradient.
  Tensor detach() const;

  bool all_finite() const;

  /// Builds an op result. The graph is only recorded when a parent needs it.
  static Tensor make_result(Shape shape, std::vector<T> values,
                            std::initializer_list<Tensor> parents, BackwardFn fn);
  static Tensor make_result(Shape shape, std::vector<T> values,
                            const std::vector<Tensor>& parents, BackwardFn fn);

  detail::Node<T>& node() const;
  const std::shared_ptr<detail::Node<T>>& handle() const noexcept { return impl_; }

private:
  std::shared_ptr<detail::Node<T>> impl_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

} // namespace mfp::nn
