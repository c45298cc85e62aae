#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "mfp/nn/tensor.hpp"
#include "mfp/rng.hpp"

namespace testutil {

template <class T = double>
mfp::nn::Tensor<T> random_tensor(mfp::nn::Shape shape, mfp::SplitMix64& rng, bool grad = true,
                                 double lo = -1.0, double hi = 1.0) {
  std::vector<T> v(mfp::nn::numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return mfp::nn::Tensor<T>(std::move(shape), std::move(v), grad);
}

template <class T = double>
mfp::nn::Tensor<T> tensor(mfp::nn::Shape shape, std::vector<T> v, bool grad = false) {
  return mfp::nn::Tensor<T>(std::move(shape), std::move(v), grad);
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, mfp::SplitMix64& rng,
                                     double lo = -1.0, double hi = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

template <class T>
std::vector<double> values(const mfp::nn::Tensor<T>& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? m : INFINITY;
}

} // namespace testutil
