#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mfp/forecaster/config.hpp"
#include "mfp/forecaster/layers.hpp"

namespace mfp {

/// Graph-carrying outputs of one batched forward pass; one entry per future.
template <class T>
struct BatchForward {
  std::vector<nn::Tensor<T>> futures;     ///< (batch, d, horizon)
  std::vector<nn::Tensor<T>> shape_preds; ///< (batch, d, horizon)
  std::vector<nn::Tensor<T>> scale_mul;   ///< (batch, d)
  std::vector<nn::Tensor<T>> scale_add;   ///< (batch, d)
  std::vector<nn::Tensor<T>> activations; ///< (batch, d, bank_size)
};

/// Plain-value prediction for one input window.
struct FutureSet {
  std::vector<Eigen::MatrixXd> futures;     ///< f matrices, d x horizon
  std::vector<Eigen::MatrixXd> shape_preds; ///< f matrices, d x horizon
  Eigen::MatrixXd scale_mul;                ///< f x d
  Eigen::MatrixXd scale_add;                ///< f x d
  /// activations[i][j]: template weights of future i, feature j.
  std::vector<std::vector<Eigen::VectorXd>> activations;

  std::size_t size() const noexcept { return futures.size(); }
};

struct ParameterCount {
  std::size_t encoder = 0;
  std::size_t decoder = 0;
  std::vector<std::size_t> per_decoder; ///< shape + scale decoder of each future
  std::size_t total() const noexcept { return encoder + decoder; }
};

/// (batch, d, history) tensor from time-major n x d windows.
template <class T>
nn::Tensor<T> windows_to_tensor(std::span<const Eigen::MatrixXd> windows);

/// Multi-future forecaster: shape and scale encoder/decoder-ensemble pairs
/// whose outputs combine per future as mul * shape + add. The variant tag
/// selects the ablation structure.
template <class T>
class Forecaster {
public:
  Forecaster(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }

  /// input: (batch, d, history).
  BatchForward<T> forward(const nn::Tensor<T>& input) const;

  /// history_window: history x d, time-major.
  FutureSet predict(const Eigen::MatrixXd& history_window) const;
  std::vector<FutureSet> predict(std::span<const Eigen::MatrixXd> windows) const;

  /// All trainable tensors in a stable order.
  std::vector<nn::NamedTensor<T>> parameters() const;
  ParameterCount count_parameters() const;

  std::size_t encoder_blocks() const;
  /// Sequence lengths through the first shape encoder for one forward pass.
  std::vector<std::size_t> encoder_lengths() const;
  /// Sequence lengths through the first tconv stack; empty for bank decoders.
  std::vector<std::size_t> tconv_lengths() const;

  const ShapeDecoder<T>& shape_decoder(std::size_t future) const;
  /// Bank of (future, feature) as bank_size x horizon; throws for tconv decoders.
  Eigen::MatrixXd bank(std::size_t future, std::size_t feature) const;
  /// Marks every shape bank as trainable or frozen.
  void set_banks_trainable(bool trainable);

private:
  struct Branch {
    Encoder<T> shape_encoder;
    std::vector<Encoder<T>> scale_encoder; // zero or one
    std::vector<ShapeDecoder<T>> shape_decoders;
    std::vector<ScaleDecoder<T>> scale_decoders;
  };

  ModelConfig config_;
  std::vector<Branch> branches_;
};

extern template class Forecaster<float>;
extern template class Forecaster<double>;

} // namespace mfp
