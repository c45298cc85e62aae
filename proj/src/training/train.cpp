#include "mfp/training/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mfp/nn/adam.hpp"
#include "mfp/nn/ops.hpp"

namespace mfp {

void TrainConfig::validate() const {
  if (!std::isfinite(gamma) || gamma < 0.0) throw ConfigError("gamma must be finite and >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be > 0");
  }
  if (!(znorm_epsilon > 0.0)) throw ConfigError("znorm_epsilon must be > 0");
}

double effective_gamma(const ModelConfig& model, const TrainConfig& train) {
  return model.variant == Variant::one_loss ? 0.0 : train.gamma;
}

namespace {

/// (batch, d, horizon) tensors of the targets and their z-normalized copies.
template <class T>
std::pair<nn::Tensor<T>, nn::Tensor<T>> target_tensors(const MiniBatch& batch, double epsilon) {
  std::vector<Eigen::MatrixXd> z;
  z.reserve(batch.size());
  for (const auto& t : batch.targets) {
    z.push_back(z_normalize(t, epsilon));
  }
  return {windows_to_tensor<T>(batch.targets), windows_to_tensor<T>(z)};
}

/// Per-instance oracle from shape predictions (batch, d, horizon) against
/// z-normalized targets; rmse is compared so ties match oracle_index().
template <class T>
std::vector<std::size_t> pick_oracle(const std::vector<nn::Tensor<T>>& shapes,
                                     const nn::Tensor<T>& ztruth) {
  const std::size_t B = ztruth.dim(0);
  const std::size_t per = ztruth.numel() / B;
  const auto z = ztruth.data();
  std::vector<std::size_t> out(B, 0);
  for (std::size_t b = 0; b < B; ++b) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      const auto s = shapes[i].data();
      double sse = 0.0;
      for (std::size_t k = b * per; k < (b + 1) * per; ++k) {
        const double e = static_cast<double>(s[k]) - static_cast<double>(z[k]);
        sse += e * e;
      }
      const double r = std::sqrt(sse / static_cast<double>(per));
      if (i == 0 || r < best) {
        best = r;
        out[b] = i;
      }
    }
  }
  return out;
}

template <class T>
double mean_of(const nn::Tensor<T>& t) {
  double s = 0.0;
  for (T v : t.data()) s += static_cast<double>(v);
  return s / static_cast<double>(t.numel());
}

} // namespace

template <class T>
BatchLoss<T> oracle_batch_loss(const BatchForward<T>& forward, const MiniBatch& batch,
                               double gamma, double epsilon) {
  auto [truth, ztruth] = target_tensors<T>(batch, epsilon);
  BatchLoss<T> out;
  out.oracle = pick_oracle(forward.shape_preds, ztruth);
  const auto chosen_future = nn::select1(nn::stack1(forward.futures), std::span(out.oracle));
  const auto rmse_b = nn::rmse_rows(chosen_future, truth);
  out.rmse_mean = mean_of(rmse_b);
  out.loss = nn::sum(rmse_b);
  if (gamma != 0.0) {
    const auto chosen_shape =
        nn::select1(nn::stack1(forward.shape_preds), std::span(out.oracle));
    const auto nrmse_b = nn::rmse_rows(chosen_shape, ztruth);
    out.nrmse_mean = mean_of(nrmse_b);
    out.loss = nn::add(out.loss, nn::scale(nn::sum(nrmse_b), static_cast<T>(gamma)));
  } else {
    nn::NoGradGuard guard;
    const auto chosen_shape =
        nn::select1(nn::stack1(forward.shape_preds), std::span(out.oracle));
    out.nrmse_mean = mean_of(nn::rmse_rows(chosen_shape, ztruth));
  }
  return out;
}

template <class T>
std::vector<std::size_t> oracle_labels(const Forecaster<T>& model, const MiniBatch& batch,
                                       double epsilon) {
  nn::NoGradGuard guard;
  const auto fw = model.forward(windows_to_tensor<T>(batch.inputs));
  const auto [truth, ztruth] = target_tensors<T>(batch, epsilon);
  return pick_oracle(fw.shape_preds, ztruth);
}

template <class T>
std::vector<LossRecord> train_model(Forecaster<T>& model,
                                    std::span<const data::MultivariateSeries> series,
                                    const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  const auto& mc = model.config();
  const double gamma = effective_gamma(mc, config);
  SplitMix64 rng(derive_seed(config.seed, seed_stream::batches));
  nn::Adam<T> adam(model.parameters(),
                   nn::AdamOptions{config.learning_rate, 0.9, 0.999, 1e-8});
  adam.zero_grad();

  std::vector<LossRecord> trace;
  trace.reserve(config.iterations);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const auto batch = sample_minibatch(series, mc.history, mc.horizon, config.batch_size, rng);
    const auto fw = model.forward(windows_to_tensor<T>(batch.inputs));
    auto loss = oracle_batch_loss(fw, batch, gamma, config.znorm_epsilon);

    LossRecord rec;
    rec.iteration = it;
    rec.rmse_term = loss.rmse_mean;
    rec.nrmse_term = loss.nrmse_mean;
    rec.total_loss = rec.rmse_term + gamma * rec.nrmse_term;
    rec.oracle_histogram.assign(mc.futures, 0);
    for (auto i : loss.oracle) ++rec.oracle_histogram[i];

    if (!std::isfinite(static_cast<double>(loss.loss.item()))) {
      char msg[160];
      std::snprintf(msg, sizeof msg,
                    "non-finite loss at iteration %zu (rmse %.6g, nrmse %.6g)", it,
                    rec.rmse_term, rec.nrmse_term);
      throw nn::NumericalError(msg);
    }
    loss.loss.backward();
    adam.step();
    for (const auto& p : model.parameters()) {
      if (!p.tensor.all_finite()) {
        throw nn::NumericalError("parameter " + p.name + " became non-finite at iteration " +
                                 std::to_string(it));
      }
    }
    trace.push_back(rec);
    if (progress) progress(trace.back());
  }
  return trace;
}

template <class T>
TrainResult<T> train(std::span<const data::MultivariateSeries> series, const ModelConfig& model,
                     const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult<T> out{Forecaster<T>(model, derive_seed(config.seed, seed_stream::model_init)),
                     {}, 0.0};
  out.trace = train_model(out.model, series, config, progress);
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

template <class T>
ExpertResult<T> train_expert(std::span<const data::MultivariateSeries> series,
                             const Forecaster<T>& model, const TrainConfig& config) {
  config.validate();
  const auto& mc = model.config();
  ExpertResult<T> out{ExpertClassifier<T>(mc, derive_seed(config.seed, seed_stream::expert_init)),
                      {}};
  if (mc.futures == 1) {
    return out;
  }
  SplitMix64 rng(derive_seed(config.seed, seed_stream::expert_batches));
  nn::Adam<T> adam(out.classifier.parameters(),
                   nn::AdamOptions{config.learning_rate, 0.9, 0.999, 1e-8});
  adam.zero_grad();
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const auto batch = sample_minibatch(series, mc.history, mc.horizon, config.batch_size, rng);
    const auto labels = oracle_labels(model, batch, config.znorm_epsilon);
    auto loss = nn::cross_entropy(out.classifier.logits(windows_to_tensor<T>(batch.inputs)),
                                  std::span(labels));
    const double value = static_cast<double>(loss.item());
    if (!std::isfinite(value)) {
      throw nn::NumericalError("non-finite expert loss at iteration " + std::to_string(it));
    }
    loss.backward();
    adam.step();
    out.loss_trace.push_back(value / static_cast<double>(batch.size()));
  }
  return out;
}

template <class T>
double expert_accuracy(const ExpertClassifier<T>& classifier, const Forecaster<T>& model,
                       const MiniBatch& batch, double epsilon) {
  const auto labels = oracle_labels(model, batch, epsilon);
  const auto probs = classifier.probabilities(std::span<const Eigen::MatrixXd>(batch.inputs));
  std::size_t hits = 0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    Eigen::Index best = 0;
    probs[b].maxCoeff(&best);
    hits += static_cast<std::size_t>(best) == labels[b];
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::string format_trace_csv(const std::vector<LossRecord>& trace) {
  std::string out = "iteration,total,rmse,nrmse,oracle_histogram\n";
  char buf[128];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,", r.iteration, r.total_loss, r.rmse_term,
                  r.nrmse_term);
    out += buf;
    for (std::size_t i = 0; i < r.oracle_histogram.size(); ++i) {
      if (i) out += ';';
      out += std::to_string(r.oracle_histogram[i]);
    }
    out += '\n';
  }
  return out;
}

#define MFP_INSTANTIATE_TRAIN(T)                                                                 \
  template BatchLoss<T> oracle_batch_loss(const BatchForward<T>&, const MiniBatch&, double,      \
                                          double);                                               \
  template std::vector<std::size_t> oracle_labels(const Forecaster<T>&, const MiniBatch&,        \
                                                  double);                                       \
  template std::vector<LossRecord> train_model(Forecaster<T>&,                                   \
                                               std::span<const data::MultivariateSeries>,        \
                                               const TrainConfig&, const ProgressFn&);           \
  template TrainResult<T> train(std::span<const data::MultivariateSeries>, const ModelConfig&,   \
                                const TrainConfig&, const ProgressFn&);                          \
  template ExpertResult<T> train_expert(std::span<const data::MultivariateSeries>,               \
                                        const Forecaster<T>&, const TrainConfig&);               \
  template double expert_accuracy(const ExpertClassifier<T>&, const Forecaster<T>&,              \
                                  const MiniBatch&, double);

MFP_INSTANTIATE_TRAIN(float)
MFP_INSTANTIATE_TRAIN(double)

} // namespace mfp
