#include "mfp/forecaster/model.hpp"

#include <algorithm>
#include <cmath>

#include "mfp/nn/ops.hpp"

namespace mfp {

template <class T>
nn::Tensor<T> windows_to_tensor(std::span<const Eigen::MatrixXd> windows) {
  if (windows.empty()) {
    throw nn::ShapeError("windows_to_tensor: empty batch");
  }
  const auto n = static_cast<std::size_t>(windows.front().rows());
  const auto d = static_cast<std::size_t>(windows.front().cols());
  std::vector<T> data(windows.size() * d * n);
  for (std::size_t b = 0; b < windows.size(); ++b) {
    const auto& w = windows[b];
    if (static_cast<std::size_t>(w.rows()) != n || static_cast<std::size_t>(w.cols()) != d) {
      throw nn::ShapeError("windows_to_tensor: window " + std::to_string(b) +
                           " has a different shape");
    }
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t t = 0; t < n; ++t) {
        data[(b * d + j) * n + t] = static_cast<T>(w(t, j));
      }
    }
  }
  return nn::Tensor<T>({windows.size(), d, n}, std::move(data));
}

template <class T>
Forecaster<T>::Forecaster(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  SplitMix64 rng(seed);
  const Variant v = config_.variant;
  if (v == Variant::model_ensemble) {
    for (std::size_t i = 0; i < config_.futures; ++i) {
      const std::string p = "member" + std::to_string(i) + ".";
      Branch b{Encoder<T>(p + "shape_encoder", config_, rng), {}, {}, {}};
      b.scale_encoder.emplace_back(p + "scale_encoder", config_, rng);
      b.shape_decoders.emplace_back(p + "shape_decoder0", config_, rng);
      b.scale_decoders.emplace_back(p + "scale_decoder0", config_, rng);
      branches_.push_back(std::move(b));
    }
    return;
  }
  Branch b{Encoder<T>("shape_encoder", config_, rng), {}, {}, {}};
  const bool separate_scale = v == Variant::full || v == Variant::one_loss ||
                              v == Variant::tconv_decoder;
  if (separate_scale) {
    b.scale_encoder.emplace_back("scale_encoder", config_, rng);
  }
  for (std::size_t i = 0; i < config_.futures; ++i) {
    b.shape_decoders.emplace_back("shape_decoder" + std::to_string(i), config_, rng);
    if (v != Variant::non_separated) {
      b.scale_decoders.emplace_back("scale_decoder" + std::to_string(i), config_, rng);
    }
  }
  branches_.push_back(std::move(b));
}

template <class T>
BatchForward<T> Forecaster<T>::forward(const nn::Tensor<T>& input) const {
  if (input.rank() != 3 || input.dim(1) != config_.features || input.dim(2) != config_.history) {
    throw nn::ShapeError("forecaster: expected input (batch, " +
                         std::to_string(config_.features) + ", " +
                         std::to_string(config_.history) + "), got " +
                         nn::to_string(input.shape()));
  }
  const std::size_t B = input.dim(0), d = config_.features;
  BatchForward<T> out;
  for (const auto& br : branches_) {
    const auto hs = br.shape_encoder.forward(input);
    const auto hc = br.scale_encoder.empty() ? hs : br.scale_encoder.front().forward(input);
    for (std::size_t k = 0; k < br.shape_decoders.size(); ++k) {
      auto so = br.shape_decoders[k].forward(hs);
      out.activations.push_back(so.activations);
      if (br.scale_decoders.empty()) {
        // Raw-unit synthesis; shape and scale are read back off the output.
        const auto raw = so.shape.data();
        const std::size_t H = config_.horizon;
        std::vector<T> mul(B * d), add(B * d);
        for (std::size_t r = 0; r < B * d; ++r) {
          double mean = 0;
          for (std::size_t t = 0; t < H; ++t) mean += raw[r * H + t];
          mean /= static_cast<double>(H);
          double var = 0;
          for (std::size_t t = 0; t < H; ++t) {
            var += (raw[r * H + t] - mean) * (raw[r * H + t] - mean);
          }
          mul[r] = static_cast<T>(
              std::max(std::sqrt(var / static_cast<double>(H)), config_.znorm_epsilon));
          add[r] = static_cast<T>(mean);
        }
        out.futures.push_back(so.shape);
        out.shape_preds.push_back(nn::standardize_last(so.shape, config_.znorm_epsilon));
        out.scale_mul.emplace_back(nn::Shape{B, d}, std::move(mul));
        out.scale_add.emplace_back(nn::Shape{B, d}, std::move(add));
      } else {
        auto sc = br.scale_decoders[k].forward(hc);
        out.futures.push_back(nn::combine_scale(so.shape, sc.mul, sc.add));
        out.shape_preds.push_back(so.shape);
        out.scale_mul.push_back(sc.mul);
        out.scale_add.push_back(sc.add);
      }
    }
  }
  return out;
}

template <class T>
FutureSet Forecaster<T>::predict(const Eigen::MatrixXd& history_window) const {
  return predict(std::span<const Eigen::MatrixXd>(&history_window, 1)).front();
}

template <class T>
std::vector<FutureSet> Forecaster<T>::predict(std::span<const Eigen::MatrixXd> windows) const {
  for (const auto& w : windows) {
    if (static_cast<std::size_t>(w.rows()) != config_.history ||
        static_cast<std::size_t>(w.cols()) != config_.features) {
      throw nn::ShapeError("forecaster: expected a " + std::to_string(config_.history) + " x " +
                           std::to_string(config_.features) + " window, got " +
                           std::to_string(w.rows()) + " x " + std::to_string(w.cols()));
    }
  }
  const auto fw = forward(windows_to_tensor<T>(windows));
  const std::size_t B = windows.size(), f = config_.futures, d = config_.features;
  const std::size_t H = config_.horizon, S = config_.bank_size;
  std::vector<FutureSet> sets(B);
  for (std::size_t b = 0; b < B; ++b) {
    auto& fs = sets[b];
    fs.scale_mul.resize(f, d);
    fs.scale_add.resize(f, d);
    fs.activations.resize(f);
    for (std::size_t i = 0; i < f; ++i) {
      Eigen::MatrixXd fut(d, H), shp(d, H);
      const auto fd = fw.futures[i].data();
      const auto sd = fw.shape_preds[i].data();
      for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t t = 0; t < H; ++t) {
          fut(j, t) = fd[(b * d + j) * H + t];
          shp(j, t) = sd[(b * d + j) * H + t];
        }
        fs.scale_mul(i, j) = fw.scale_mul[i].data()[b * d + j];
        fs.scale_add(i, j) = fw.scale_add[i].data()[b * d + j];
        Eigen::VectorXd r(S);
        for (std::size_t k = 0; k < S; ++k) {
          r(k) = fw.activations[i].data()[(b * d + j) * S + k];
        }
        fs.activations[i].push_back(std::move(r));
      }
      fs.futures.push_back(std::move(fut));
      fs.shape_preds.push_back(std::move(shp));
    }
  }
  return sets;
}

template <class T>
std::vector<nn::NamedTensor<T>> Forecaster<T>::parameters() const {
  std::vector<nn::NamedTensor<T>> out;
  for (const auto& br : branches_) {
    br.shape_encoder.collect(out);
    for (const auto& e : br.scale_encoder) e.collect(out);
    for (std::size_t k = 0; k < br.shape_decoders.size(); ++k) {
      br.shape_decoders[k].collect(out);
      if (k < br.scale_decoders.size()) br.scale_decoders[k].collect(out);
    }
  }
  return out;
}

template <class T>
ParameterCount Forecaster<T>::count_parameters() const {
  ParameterCount pc;
  for (const auto& br : branches_) {
    pc.encoder += br.shape_encoder.parameter_count();
    for (const auto& e : br.scale_encoder) pc.encoder += e.parameter_count();
    for (std::size_t k = 0; k < br.shape_decoders.size(); ++k) {
      std::size_t n = br.shape_decoders[k].parameter_count();
      if (k < br.scale_decoders.size()) n += br.scale_decoders[k].parameter_count();
      pc.per_decoder.push_back(n);
      pc.decoder += n;
    }
  }
  return pc;
}

template <class T>
std::size_t Forecaster<T>::encoder_blocks() const {
  return branches_.front().shape_encoder.blocks();
}

template <class T>
std::vector<std::size_t> Forecaster<T>::encoder_lengths() const {
  std::vector<std::size_t> lengths;
  branches_.front().shape_encoder.forward(
      nn::Tensor<T>(nn::Shape{1, config_.features, config_.history}), lengths);
  return lengths;
}

template <class T>
std::vector<std::size_t> Forecaster<T>::tconv_lengths() const {
  const auto& dec = branches_.front().shape_decoders.front();
  if (dec.uses_bank()) {
    return {};
  }
  std::vector<std::size_t> lengths;
  dec.forward(nn::Tensor<T>(nn::Shape{1, config_.channels}), lengths);
  return lengths;
}

template <class T>
const ShapeDecoder<T>& Forecaster<T>::shape_decoder(std::size_t future) const {
  if (future >= config_.futures) {
    throw std::out_of_range("future index " + std::to_string(future) + " out of range");
  }
  if (config_.variant == Variant::model_ensemble) {
    return branches_[future].shape_decoders.front();
  }
  return branches_.front().shape_decoders[future];
}

template <class T>
Eigen::MatrixXd Forecaster<T>::bank(std::size_t future, std::size_t feature) const {
  const auto& dec = shape_decoder(future);
  if (!dec.uses_bank()) {
    throw std::logic_error("tconv decoders have no shape bank");
  }
  if (feature >= config_.features) {
    throw std::out_of_range("feature index " + std::to_string(feature) + " out of range");
  }
  const std::size_t S = config_.bank_size, H = config_.horizon;
  const auto data = dec.bank().data();
  Eigen::MatrixXd m(S, H);
  for (std::size_t k = 0; k < S; ++k) {
    for (std::size_t t = 0; t < H; ++t) {
      m(k, t) = data[(feature * S + k) * H + t];
    }
  }
  return m;
}

template <class T>
void Forecaster<T>::set_banks_trainable(bool trainable) {
  for (auto& br : branches_) {
    for (auto& dec : br.shape_decoders) {
      if (dec.uses_bank()) {
        auto bank = dec.bank();
        bank.set_requires_grad(trainable);
      }
    }
  }
}

template nn::Tensor<float> windows_to_tensor(std::span<const Eigen::MatrixXd>);
template nn::Tensor<double> windows_to_tensor(std::span<const Eigen::MatrixXd>);
template class Forecaster<float>;
template class Forecaster<double>;

} // namespace mfp
