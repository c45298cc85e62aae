#include "mfp/forecaster/expert.hpp"

#include "mfp/forecaster/model.hpp"
#include "mfp/nn/ops.hpp"

namespace mfp {

namespace {
SplitMix64& validated(const ModelConfig& c, SplitMix64& rng) {
  c.validate();
  return rng;
}
} // namespace

template <class T>
ExpertClassifier<T>::ExpertClassifier(const ModelConfig& config, std::uint64_t seed)
    : config_(config),
      encoder_([&] {
        SplitMix64 rng(seed);
        return Encoder<T>("expert.encoder", config, validated(config, rng));
      }()),
      head_([&] {
        SplitMix64 rng(derive_seed(seed, 1));
        return make_linear<T>("expert.head", config.futures, config.channels, rng);
      }()) {}

template <class T>
nn::Tensor<T> ExpertClassifier<T>::logits(const nn::Tensor<T>& input) const {
  return nn::linear(encoder_.forward(input), head_.weight, head_.bias);
}

template <class T>
Eigen::VectorXd ExpertClassifier<T>::probabilities(const Eigen::MatrixXd& history_window) const {
  return probabilities(std::span<const Eigen::MatrixXd>(&history_window, 1)).front();
}

template <class T>
std::vector<Eigen::VectorXd> ExpertClassifier<T>::probabilities(
    std::span<const Eigen::MatrixXd> windows) const {
  const auto p = nn::softmax(logits(windows_to_tensor<T>(windows)));
  const std::size_t f = config_.futures;
  std::vector<Eigen::VectorXd> out;
  for (std::size_t b = 0; b < windows.size(); ++b) {
    Eigen::VectorXd v(f);
    for (std::size_t i = 0; i < f; ++i) v(i) = p.data()[b * f + i];
    out.push_back(std::move(v));
  }
  return out;
}

template <class T>
std::vector<nn::NamedTensor<T>> ExpertClassifier<T>::parameters() const {
  std::vector<nn::NamedTensor<T>> out;
  encoder_.collect(out);
  head_.collect(out);
  return out;
}

template class ExpertClassifier<float>;
template class ExpertClassifier<double>;

} // namespace mfp
