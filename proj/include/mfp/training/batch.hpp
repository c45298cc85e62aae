#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mfp/data/series.hpp"
#include "mfp/rng.hpp"

namespace mfp {

struct WindowOrigin {
  std::size_t series = 0; ///< index into the sampled series list
  std::size_t start = 0;  ///< first input row
};

struct MiniBatch {
  std::vector<Eigen::MatrixXd> inputs;  ///< history x d each
  std::vector<Eigen::MatrixXd> targets; ///< horizon x d each, rows right after the input
  std::vector<WindowOrigin> origins;

  std::size_t size() const noexcept { return inputs.size(); }
};

/// Number of (input, target) windows a series offers.
std::size_t window_count(const data::MultivariateSeries& series, std::size_t history,
                         std::size_t horizon) noexcept;

/// Draws batch_size windows uniformly, with replacement, over every valid
/// (series, start) pair. Throws data::DataError when no series is long enough.
MiniBatch sample_minibatch(std::span<const data::MultivariateSeries> series, std::size_t history,
                           std::size_t horizon, std::size_t batch_size, SplitMix64& rng);

} // namespace mfp
