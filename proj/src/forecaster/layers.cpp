#include "mfp/forecaster/layers.hpp"

#include <cmath>

#include "mfp/nn/ops.hpp"

namespace mfp {

template <class T>
std::size_t LayerParams<T>::parameter_count() const {
  return weight.numel() + (bias.defined() ? bias.numel() : 0);
}

template <class T>
void LayerParams<T>::collect(std::vector<nn::NamedTensor<T>>& out) const {
  out.push_back({name + ".weight", weight});
  if (bias.defined()) {
    out.push_back({name + ".bias", bias});
  }
}

namespace {

template <class T>
nn::Tensor<T> uniform_tensor(nn::Shape shape, double bound, SplitMix64& rng) {
  std::vector<T> v(nn::numel(shape));
  for (auto& x : v) {
    x = static_cast<T>(rng.uniform(-bound, bound));
  }
  return nn::Tensor<T>(std::move(shape), std::move(v), true);
}

} // namespace

template <class T>
LayerParams<T> make_conv(std::string name, std::size_t out, std::size_t in, std::size_t kernel,
                         SplitMix64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(in * kernel));
  return {std::move(name), uniform_tensor<T>({out, in, kernel}, bound, rng),
          nn::Tensor<T>(nn::Shape{out}, true)};
}

template <class T>
LayerParams<T> make_linear(std::string name, std::size_t out, std::size_t in, SplitMix64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(in));
  return {std::move(name), uniform_tensor<T>({out, in}, bound, rng),
          nn::Tensor<T>(nn::Shape{out}, true)};
}

// ---------------------------------------------------------------------------
// Encoder

template <class T>
Encoder<T>::Encoder(std::string name, const ModelConfig& config, SplitMix64& rng)
    : padding_(config.kernel / 2) {
  const std::size_t blocks = config.encoder_blocks();
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t in = b == 0 ? config.features : config.channels;
    convs_.push_back(make_conv<T>(name + ".block" + std::to_string(b), config.channels, in,
                                  config.kernel, rng));
  }
}

template <class T>
nn::Tensor<T> Encoder<T>::forward(const nn::Tensor<T>& input) const {
  std::vector<std::size_t> unused;
  return forward(input, unused);
}

template <class T>
nn::Tensor<T> Encoder<T>::forward(const nn::Tensor<T>& input,
                                  std::vector<std::size_t>& lengths) const {
  if (input.rank() != 3 || input.dim(1) != convs_.front().weight.dim(1)) {
    throw nn::ShapeError("encoder: expected (batch, " +
                         std::to_string(convs_.front().weight.dim(1)) +
                         ", history), got " + nn::to_string(input.shape()));
  }
  lengths.assign(1, input.dim(2));
  nn::Tensor<T> h = input;
  for (std::size_t b = 0; b < convs_.size(); ++b) {
    h = nn::relu(nn::conv1d(h, convs_[b].weight, convs_[b].bias, padding_));
    h = b + 1 < convs_.size() ? nn::maxpool1d(h) : nn::adaptive_avgpool1d(h);
    lengths.push_back(h.dim(2));
  }
  return nn::reshape(h, {h.dim(0), h.dim(1)});
}

template <class T>
std::size_t Encoder<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& c : convs_) n += c.parameter_count();
  return n;
}

template <class T>
void Encoder<T>::collect(std::vector<nn::NamedTensor<T>>& out) const {
  for (const auto& c : convs_) c.collect(out);
}

// ---------------------------------------------------------------------------
// Shape decoder

template <class T>
ShapeDecoder<T>::ShapeDecoder(std::string name, const ModelConfig& config, SplitMix64& rng)
    : name_(std::move(name)),
      features_(config.features),
      bank_size_(config.bank_size),
      horizon_(config.horizon),
      channels_(config.channels),
      padding_(config.kernel / 2),
      regressor_(make_linear<T>(name_ + ".regressor", config.features * config.bank_size,
                                config.channels, rng)) {
  if (config.variant == Variant::tconv_decoder) {
    for (std::size_t j = 0; j < features_; ++j) {
      const std::string base = name_ + ".tconv" + std::to_string(j);
      TConvStack s{make_linear<T>(base + ".linear", channels_, bank_size_, rng), {},
                   LayerParams<T>{}};
      for (std::size_t k = 0; k < kTConvBlocks; ++k) {
        s.blocks.push_back(make_conv<T>(base + ".block" + std::to_string(k), channels_,
                                        channels_, config.kernel, rng));
      }
      s.output = make_conv<T>(base + ".out", 1, channels_, config.kernel, rng);
      tconv_.push_back(std::move(s));
    }
  } else {
    std::vector<T> v(features_ * bank_size_ * horizon_);
    for (auto& x : v) {
      x = static_cast<T>(rng.normal(0.0, 0.1));
    }
    bank_ = nn::Tensor<T>({features_, bank_size_, horizon_}, std::move(v), true);
  }
}

template <class T>
ShapeOutput<T> ShapeDecoder<T>::forward(const nn::Tensor<T>& hidden) const {
  std::vector<std::size_t> unused;
  return forward(hidden, unused);
}

template <class T>
ShapeOutput<T> ShapeDecoder<T>::forward(const nn::Tensor<T>& hidden,
                                        std::vector<std::size_t>& lengths) const {
  const std::size_t B = hidden.dim(0);
  auto logits = nn::linear(hidden, regressor_.weight, regressor_.bias);
  auto r = nn::softmax(nn::reshape(logits, {B, features_, bank_size_}));
  if (uses_bank()) {
    return {r, nn::bank_mix(r, bank_)};
  }

  lengths.clear();
  std::vector<nn::Tensor<T>> rows;
  for (std::size_t j = 0; j < features_; ++j) {
    const auto& s = tconv_[j];
    auto h = nn::relu(nn::linear(nn::take1(r, j), s.input.weight, s.input.bias));
    h = nn::reshape(h, {B, channels_, 1});
    if (j == 0) lengths.push_back(h.dim(2));
    for (std::size_t k = 0; k < s.blocks.size(); ++k) {
      h = nn::relu(nn::tconv1d(h, s.blocks[k].weight, s.blocks[k].bias, padding_));
      const std::size_t target = k + 1 < s.blocks.size() ? 2 * h.dim(2) : horizon_;
      h = nn::upsample_nearest(h, target);
      if (j == 0) lengths.push_back(h.dim(2));
    }
    h = nn::conv1d(h, s.output.weight, s.output.bias, padding_);
    rows.push_back(nn::reshape(h, {B, horizon_}));
  }
  return {r, nn::stack1(rows)};
}

template <class T>
std::size_t ShapeDecoder<T>::parameter_count() const {
  std::size_t n = regressor_.parameter_count();
  if (bank_.defined()) n += bank_.numel();
  for (const auto& s : tconv_) {
    n += s.input.parameter_count() + s.output.parameter_count();
    for (const auto& b : s.blocks) n += b.parameter_count();
  }
  return n;
}

template <class T>
void ShapeDecoder<T>::collect(std::vector<nn::NamedTensor<T>>& out) const {
  regressor_.collect(out);
  if (bank_.defined()) {
    out.push_back({name_ + ".bank", bank_});
  }
  for (const auto& s : tconv_) {
    s.input.collect(out);
    for (const auto& b : s.blocks) b.collect(out);
    s.output.collect(out);
  }
}

// ---------------------------------------------------------------------------
// Scale decoder

template <class T>
ScaleDecoder<T>::ScaleDecoder(std::string name, const ModelConfig& config, SplitMix64& rng)
    : features_(config.features),
      linear_(make_linear<T>(std::move(name), 2 * config.features, config.channels, rng)) {}

template <class T>
ScaleOutput<T> ScaleDecoder<T>::forward(const nn::Tensor<T>& hidden) const {
  auto out = nn::linear(hidden, linear_.weight, linear_.bias);
  return {nn::slice_last(out, 0, features_), nn::slice_last(out, features_, 2 * features_)};
}

template struct LayerParams<float>;
template struct LayerParams<double>;
template LayerParams<float> make_conv(std::string, std::size_t, std::size_t, std::size_t,
                                      SplitMix64&);
template LayerParams<double> make_conv(std::string, std::size_t, std::size_t, std::size_t,
                                       SplitMix64&);
template LayerParams<float> make_linear(std::string, std::size_t, std::size_t, SplitMix64&);
template LayerParams<double> make_linear(std::string, std::size_t, std::size_t, SplitMix64&);
template class Encoder<float>;
template class Encoder<double>;
template class ShapeDecoder<float>;
template class ShapeDecoder<double>;
template class ScaleDecoder<float>;
template class ScaleDecoder<double>;

} // namespace mfp
