#include "mfp/training/batch.hpp"

#include <string>

namespace mfp {

std::size_t window_count(const data::MultivariateSeries& series, std::size_t history,
                         std::size_t horizon) noexcept {
  const std::size_t need = history + horizon;
  return series.length() >= need ? series.length() - need + 1 : 0;
}

MiniBatch sample_minibatch(std::span<const data::MultivariateSeries> series, std::size_t history,
                           std::size_t horizon, std::size_t batch_size, SplitMix64& rng) {
  if (history == 0 || horizon == 0) {
    throw data::DataError("sample_minibatch: history and horizon must be positive");
  }
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  for (const auto& s : series) {
    counts.push_back(window_count(s, history, horizon));
    total += counts.back();
  }
  if (total == 0) {
    throw data::DataError("sample_minibatch: series too short, need at least " +
                          std::to_string(history + horizon) + " hours");
  }
  MiniBatch batch;
  batch.inputs.reserve(batch_size);
  batch.targets.reserve(batch_size);
  batch.origins.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    std::size_t k = rng.index(total);
    std::size_t which = 0;
    while (k >= counts[which]) {
      k -= counts[which];
      ++which;
    }
    const auto& s = series[which];
    batch.inputs.push_back(s.window(k, history));
    batch.targets.push_back(s.window(k + history, horizon));
    batch.origins.push_back({which, k});
  }
  return batch;
}

} // namespace mfp
