#include "mfp/nn/tensor.hpp"

#include <cmath>
#include <unordered_set>

namespace mfp::nn {

std::size_t numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (auto e : shape) {
    n *= e;
  }
  return n;
}

std::string to_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) {
      s += ", ";
    }
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

namespace {
thread_local bool g_grad_enabled = true;
} // namespace

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() noexcept : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <class T>
Tensor<T>::Tensor(Shape shape, bool requires_grad)
    : impl_(std::make_shared<detail::Node<T>>()) {
  impl_->data.assign(nn::numel(shape), T(0));
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : impl_(std::make_shared<detail::Node<T>>()) {
  if (values.size() != nn::numel(shape)) {
    throw ShapeError("tensor data length " + std::to_string(values.size()) +
                     " does not match shape " + to_string(shape));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
  impl_->requires_grad = requires_grad;
}

template <class T>
detail::Node<T>& Tensor<T>::node() const {
  if (!impl_) {
    throw std::logic_error("access to an undefined tensor");
  }
  return *impl_;
}

template <class T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  const auto& s = node().shape;
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     to_string(s));
  }
  return s[axis];
}

template <class T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + to_string(shape()));
  }
  return node().data[0];
}

template <class T>
void Tensor<T>::zero_grad() {
  auto& n = node();
  n.grad.assign(n.data.size(), T(0));
}

template <class T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(node().shape, node().data, false);
}

template <class T>
bool Tensor<T>::all_finite() const {
  for (T v : node().data) {
    if (!std::isfinite(v)) {
      return false;
    }
  }
  return true;
}

template <class T>
Tensor<T> Tensor<T>::make_result(Shape shape, std::vector<T> values,
                                 std::initializer_list<Tensor> parents, BackwardFn fn) {
  return make_result(std::move(shape), std::move(values), std::vector<Tensor>(parents),
                     std::move(fn));
}

template <class T>
Tensor<T> Tensor<T>::make_result(Shape shape, std::vector<T> values,
                                 const std::vector<Tensor>& parents, BackwardFn fn) {
  Tensor out(std::move(shape), std::move(values), false);
  bool needs = false;
  if (!g_grad_enabled) {
    return out;
  }
  for (const auto& p : parents) {
    needs = needs || (p.defined() && p.requires_grad());
  }
  if (needs) {
    auto& n = out.node();
    n.requires_grad = true;
    for (const auto& p : parents) {
      if (p.defined() && p.requires_grad()) {
        n.parents.push_back(p.impl_);
      }
    }
    n.backward = std::move(fn);
  }
  return out;
}

template <class T>
void Tensor<T>::backward() {
  auto& root = node();
  if (root.data.size() != 1) {
    throw ShapeError("backward() requires a scalar, got shape " + to_string(root.shape));
  }
  if (!root.requires_grad) {
    return;
  }

  // Iterative post-order DFS gives a topological order.
  std::vector<detail::Node<T>*> order;
  std::unordered_set<detail::Node<T>*> seen;
  std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
  stack.emplace_back(impl_.get(), 0);
  seen.insert(impl_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      detail::Node<T>* p = n->parents[next++].get();
      if (seen.insert(p).second) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  root.grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node<T>* n = *it;
    if (n->backward && !n->grad.empty()) {
      n->backward(*n);
    }
  }
}

template class Tensor<float>;
template class Tensor<double>;

} // namespace mfp::nn
