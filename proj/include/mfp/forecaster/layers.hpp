#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mfp/forecaster/config.hpp"
#include "mfp/nn/adam.hpp"
#include "mfp/nn/tensor.hpp"
#include "mfp/rng.hpp"

namespace mfp {

/// Weight plus optional bias of one layer. Conv weights are
/// (out_channels, in_channels, kernel); linear weights (out_features, in_features).
template <class T>
struct LayerParams {
  std::string name;
  nn::Tensor<T> weight;
  nn::Tensor<T> bias; // undefined when the layer has none

  std::size_t parameter_count() const;
  void collect(std::vector<nn::NamedTensor<T>>& out) const;
};

/// Uniform in +-sqrt(1/fan_in), zero bias.
template <class T>
LayerParams<T> make_conv(std::string name, std::size_t out, std::size_t in, std::size_t kernel,
                         SplitMix64& rng);
template <class T>
LayerParams<T> make_linear(std::string name, std::size_t out, std::size_t in, SplitMix64& rng);

/// Conv/ReLU/MaxPool blocks followed by a Conv/ReLU/adaptive AvgPool block;
/// maps (batch, features, history) to (batch, channels).
template <class T>
class Encoder {
public:
  Encoder(std::string name, const ModelConfig& config, SplitMix64& rng);

  nn::Tensor<T> forward(const nn::Tensor<T>& input) const;
  /// Same as forward but records the sequence length after every block.
  nn::Tensor<T> forward(const nn::Tensor<T>& input, std::vector<std::size_t>& lengths) const;

  std::size_t blocks() const noexcept { return convs_.size(); }
  std::size_t parameter_count() const;
  void collect(std::vector<nn::NamedTensor<T>>& out) const;

private:
  std::vector<LayerParams<T>> convs_;
  std::size_t padding_;
};

template <class T>
struct ShapeOutput {
  nn::Tensor<T> activations; ///< (batch, features, bank_size), rows on the simplex
  nn::Tensor<T> shape;       ///< (batch, features, horizon)
};

/// One shape decoder: per feature a softmax regression over the hidden
/// vector, then either a shape-bank mix (r * S) or, for the tconv_decoder
/// variant, a Linear -> [TConv, ReLU, Upsample] x5 -> Conv synthesis from r.
template <class T>
class ShapeDecoder {
public:
  ShapeDecoder(std::string name, const ModelConfig& config, SplitMix64& rng);

  ShapeOutput<T> forward(const nn::Tensor<T>& hidden) const;
  /// Per-feature sequence lengths through the tconv stack (tconv variant only).
  ShapeOutput<T> forward(const nn::Tensor<T>& hidden, std::vector<std::size_t>& lengths) const;

  bool uses_bank() const noexcept { return tconv_.empty(); }
  /// (features, bank_size, horizon); undefined for the tconv variant.
  const nn::Tensor<T>& bank() const noexcept { return bank_; }
  const LayerParams<T>& regressor() const noexcept { return regressor_; }

  std::size_t parameter_count() const;
  void collect(std::vector<nn::NamedTensor<T>>& out) const;

private:
  struct TConvStack {
    LayerParams<T> input;
    std::vector<LayerParams<T>> blocks;
    LayerParams<T> output;
  };

  std::string name_;
  std::size_t features_, bank_size_, horizon_, channels_, padding_;
  LayerParams<T> regressor_;
  nn::Tensor<T> bank_;
  std::vector<TConvStack> tconv_;
};

template <class T>
struct ScaleOutput {
  nn::Tensor<T> mul; ///< (batch, features)
  nn::Tensor<T> add; ///< (batch, features)
};

/// Linear map hidden -> 2d: the first d outputs multiply the shape, the
/// last d are added to it.
template <class T>
class ScaleDecoder {
public:
  ScaleDecoder(std::string name, const ModelConfig& config, SplitMix64& rng);

  ScaleOutput<T> forward(const nn::Tensor<T>& hidden) const;
  const LayerParams<T>& layer() const noexcept { return linear_; }
  std::size_t parameter_count() const { return linear_.parameter_count(); }
  void collect(std::vector<nn::NamedTensor<T>>& out) const { linear_.collect(out); }

private:
  std::size_t features_;
  LayerParams<T> linear_;
};

extern template class Encoder<float>;
extern template class Encoder<double>;
extern template class ShapeDecoder<float>;
extern template class ShapeDecoder<double>;
extern template class ScaleDecoder<float>;
extern template class ScaleDecoder<double>;

} // namespace mfp
