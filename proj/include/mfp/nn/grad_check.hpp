#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "mfp/nn/tensor.hpp"

namespace mfp::nn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates skipped because a kink (relu at 0, a max-pool tie, an
  /// oracle switch) lies inside the difference stencil: the one-sided slope
  /// gap does not scale linearly with the step.
  std::size_t skipped = 0;
};

using LossClosure = std::function<Tensor<double>(const std::vector<Tensor<double>>&)>;

/// Compares reverse-mode gradients of a scalar closure against central
/// differences for every coordinate of every input that requires a gradient.
/// Error per coordinate is |g_ad - g_fd| / max(1, |g_fd|).
GradCheckResult grad_check(const LossClosure& loss, std::vector<Tensor<double>> inputs,
                           double h = 1e-4, double kink_tolerance = 1e-5);

} // namespace mfp::nn
