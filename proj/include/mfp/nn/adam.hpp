#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mfp/nn/tensor.hpp"

namespace mfp::nn {

/// A named trainable tensor; copies share storage with the owning layer.
template <class T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moments are kept in double regardless of T.
template <class T>
class Adam {
public:
  Adam(std::vector<NamedTensor<T>> params, AdamOptions options = {});

  /// Applies one update from the current gradients, then zeroes them.
  /// Throws std::logic_error when a parameter has no gradient buffer.
  void step();

  void zero_grad();

  std::size_t step_count() const noexcept { return step_count_; }
  const AdamOptions& options() const noexcept { return options_; }
  const std::vector<std::vector<double>>& first_moment() const noexcept { return m_; }
  const std::vector<std::vector<double>>& second_moment() const noexcept { return v_; }

private:
  std::vector<NamedTensor<T>> params_;
  AdamOptions options_;
  std::size_t step_count_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

extern template class Adam<float>;
extern template class Adam<double>;

} // namespace mfp::nn
