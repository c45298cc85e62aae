#include "mfp/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace mfp::nn {

template <class T>
Adam<T>::Adam(std::vector<NamedTensor<T>> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

template <class T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) {
    p.tensor.zero_grad();
  }
}

template <class T>
void Adam<T>::step() {
  for (const auto& p : params_) {
    if (p.tensor.requires_grad() && !p.tensor.has_grad()) {
      throw std::logic_error("adam: parameter '" + p.name + "' has no gradient");
    }
  }
  ++step_count_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k].tensor;
    if (!p.requires_grad()) {
      continue;
    }
    auto w = p.data();
    auto g = p.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      m[i] = b1 * m[i] + (1.0 - b1) * gi;
      v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      w[i] = static_cast<T>(w[i] - options_.learning_rate * mh / (std::sqrt(vh) + options_.epsilon));
    }
    p.zero_grad();
  }
}

template class Adam<float>;
template class Adam<double>;

} // namespace mfp::nn
