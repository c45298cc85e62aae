#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfp/data/series.hpp"
#include "mfp/forecaster/expert.hpp"
#include "mfp/forecaster/model.hpp"
#include "mfp/training/batch.hpp"
#include "mfp/training/metrics.hpp"

namespace mfp {

struct TrainConfig {
  double gamma = 1.0;
  std::size_t iterations = 2000;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  double znorm_epsilon = 1e-8;

  /// Throws ConfigError.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

/// gamma actually applied: 0 for the one_loss variant.
double effective_gamma(const ModelConfig& model, const TrainConfig& train);

/// Seed streams derived from TrainConfig::seed.
namespace seed_stream {
inline constexpr std::uint64_t model_init = 1;
inline constexpr std::uint64_t batches = 2;
inline constexpr std::uint64_t expert_init = 3;
inline constexpr std::uint64_t expert_batches = 4;
} // namespace seed_stream

/// Oracle loss of one batch: per instance, the future whose shape prediction
/// best fits the z-normalized target is selected, and the loss sums
/// rmse(future, target) + gamma * rmse(shape, z(target)) over instances.
template <class T>
struct BatchLoss {
  nn::Tensor<T> loss;              ///< scalar, carries the graph
  std::vector<std::size_t> oracle; ///< per instance
  double rmse_mean = 0.0;
  double nrmse_mean = 0.0;
};

template <class T>
BatchLoss<T> oracle_batch_loss(const BatchForward<T>& forward, const MiniBatch& batch,
                               double gamma, double epsilon);

/// Per-instance oracle labels of a batch under the given model.
template <class T>
std::vector<std::size_t> oracle_labels(const Forecaster<T>& model, const MiniBatch& batch,
                                       double epsilon);

using ProgressFn = std::function<void(const LossRecord&)>;

template <class T>
struct TrainResult {
  Forecaster<T> model;
  std::vector<LossRecord> trace; ///< loss values are batch means
  double seconds = 0.0;
};

/// Initializes a model from the seed and runs the oracle-loss training loop
/// with Adam, one update per mini-batch.
template <class T>
TrainResult<T> train(std::span<const data::MultivariateSeries> series, const ModelConfig& model,
                     const TrainConfig& config, const ProgressFn& progress = {});

template <class T>
TrainResult<T> train(const data::MultivariateSeries& series, const ModelConfig& model,
                     const TrainConfig& config, const ProgressFn& progress = {}) {
  return train<T>(std::span(&series, 1), model, config, progress);
}

/// Trains an existing model in place; batches come from `config.seed`.
template <class T>
std::vector<LossRecord> train_model(Forecaster<T>& model,
                                    std::span<const data::MultivariateSeries> series,
                                    const TrainConfig& config, const ProgressFn& progress = {});

template <class T>
struct ExpertResult {
  ExpertClassifier<T> classifier;
  std::vector<double> loss_trace; ///< mean cross-entropy per batch
};

/// Trains the expert classifier on oracle labels produced by `model`.
/// With a single future there is nothing to learn: the untrained classifier
/// is returned with an empty trace.
template <class T>
ExpertResult<T> train_expert(std::span<const data::MultivariateSeries> series,
                             const Forecaster<T>& model, const TrainConfig& config);

/// Fraction of windows whose most probable expert class equals the oracle label.
template <class T>
double expert_accuracy(const ExpertClassifier<T>& classifier, const Forecaster<T>& model,
                       const MiniBatch& batch, double epsilon);

/// CSV: iteration,total,rmse,nrmse,oracle_histogram (counts joined by ';').
std::string format_trace_csv(const std::vector<LossRecord>& trace);

} // namespace mfp
