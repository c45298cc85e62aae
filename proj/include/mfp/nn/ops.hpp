#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfp/nn/tensor.hpp"

// Differentiable operations. Layer ops accept an optional leading batch axis:
// sequence tensors are (channels, length) or (batch, channels, length), vector
// tensors are (features) or (batch, features). Results keep the same batching.

namespace mfp::nn {

/// 1D convolution, stride 1, symmetric zero padding.
/// weight (out_channels, in_channels, kernel), bias (out_channels) or undefined.
template <class T>
Tensor<T> conv1d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t padding);

/// Transposed 1D convolution, stride 1. Output length is
/// length + kernel - 1 - 2 * padding; padding crops both ends of the full
/// expansion. weight (out_channels, in_channels, kernel).
template <class T>
Tensor<T> tconv1d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                  std::size_t padding = 0);

template <class T>
Tensor<T> relu(const Tensor<T>& input);

/// Window 2, stride 2. Odd trailing element dropped; ties route to the first index.
template <class T>
Tensor<T> maxpool1d(const Tensor<T>& input);

/// Mean over the whole length; output length 1.
template <class T>
Tensor<T> adaptive_avgpool1d(const Tensor<T>& input);

/// Nearest-neighbour resize: output t reads input floor(t * length / out_length).
template <class T>
Tensor<T> upsample_nearest(const Tensor<T>& input, std::size_t out_length);

/// y = W x + b. weight (out_features, in_features).
template <class T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

/// Softmax along the last axis, max-subtracted.
template <class T>
Tensor<T> softmax(const Tensor<T>& input);

/// Convex template synthesis: out[b, g, :] = r[b, g, :] * bank[g].
/// r (groups, templates) or (batch, groups, templates); bank (groups, templates, horizon).
template <class T>
Tensor<T> bank_mix(const Tensor<T>& activations, const Tensor<T>& bank);

/// out[..., j, t] = mul[..., j] * shape[..., j, t] + add[..., j].
template <class T>
Tensor<T> combine_scale(const Tensor<T>& shape, const Tensor<T>& mul, const Tensor<T>& add);

/// Per-row z-normalization along the last axis: (x - mean) / max(std, epsilon),
/// population std.
template <class T>
Tensor<T> standardize_last(const Tensor<T>& input, double epsilon);

template <class T>
Tensor<T> reshape(const Tensor<T>& input, Shape shape);

/// Elements [begin, end) of the last axis.
template <class T>
Tensor<T> slice_last(const Tensor<T>& input, std::size_t begin, std::size_t end);

/// Stacks equal-shape (batch, ...) tensors into (batch, n, ...).
template <class T>
Tensor<T> stack1(const std::vector<Tensor<T>>& parts);

/// From (batch, n, ...) takes slice `index` of axis 1 → (batch, ...).
template <class T>
Tensor<T> take1(const Tensor<T>& input, std::size_t index);

/// From (batch, n, ...) takes a per-sample slice of axis 1 → (batch, ...).
template <class T>
Tensor<T> select1(const Tensor<T>& input, std::span<const std::size_t> indices);

/// Per-sample RMSE against a constant target: (batch, ...) → (batch).
/// The gradient at an exact zero error is taken as zero.
template <class T>
Tensor<T> rmse_rows(const Tensor<T>& pred, const Tensor<T>& target);

template <class T>
Tensor<T> sum(const Tensor<T>& input);

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <class T>
Tensor<T> scale(const Tensor<T>& input, T factor);

/// Summed softmax cross-entropy of (batch, classes) logits against labels.
template <class T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const std::size_t> labels);

} // namespace mfp::nn
