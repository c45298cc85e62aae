#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mfp/forecaster/config.hpp"
#include "mfp/forecaster/layers.hpp"

namespace mfp {

/// Shape-encoder architecture plus a linear + softmax head over the f futures;
/// predicts which future will fit best.
template <class T>
class ExpertClassifier {
public:
  ExpertClassifier(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  std::size_t futures() const noexcept { return config_.futures; }

  /// input (batch, d, history) -> logits (batch, f).
  nn::Tensor<T> logits(const nn::Tensor<T>& input) const;

  /// Probability over futures for one history x d window.
  Eigen::VectorXd probabilities(const Eigen::MatrixXd& history_window) const;
  std::vector<Eigen::VectorXd> probabilities(std::span<const Eigen::MatrixXd> windows) const;

  std::vector<nn::NamedTensor<T>> parameters() const;

private:
  ModelConfig config_;
  Encoder<T> encoder_;
  LayerParams<T> head_;
};

extern template class ExpertClassifier<float>;
extern template class ExpertClassifier<double>;

} // namespace mfp
