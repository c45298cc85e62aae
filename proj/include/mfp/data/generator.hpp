#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mfp/data/series.hpp"

namespace mfp::data {

/// One behavioural regime of a synthetic merchant.
struct RegimeSpec {
  double level = 1.0;           ///< multiplies the base transaction volume
  double daily_amplitude = 1.0; ///< multiplies GeneratorConfig::daily_amp
  double phase_hours = 0.0;     ///< shifts the daily peak

  bool operator==(const RegimeSpec&) const = default;
};

/// Synthetic hourly merchant aggregates (approved_count, unique_cards,
/// amount_sum, approval_rate) with daily/weekly seasonality and day-level
/// regime switching. The output is labelled synthetic; it does not model any
/// real merchant population.
struct GeneratorConfig {
  std::size_t n_hours = 30 * 24;
  std::uint64_t seed = 0;
  double daily_amp = 0.6;
  double weekly_amp = 0.2;
  double noise_std = 0.05;
  std::vector<RegimeSpec> regimes{{1.0, 1.0, 0.0}, {0.7, 1.3, 7.0}};
  /// Probability, at each day boundary, of moving to a different regime.
  double regime_switch_prob = 0.5;
  /// Hourly approved count, unique-card ratio, average ticket, approval rate.
  std::array<double, 4> base_levels{20.0, 0.8, 2.5, 0.95};
  HourStamp start_hour = 17836 * 24; // 2018-11-01T00:00Z, a Thursday
  std::string merchant_id = "synthetic-000";

  /// Throws DataError for out-of-range values.
  void validate() const;
};

struct GeneratedSeries {
  MultivariateSeries series;
  std::vector<std::size_t> day_regimes; ///< regime index of every (partial) day
};

GeneratedSeries generate_with_regimes(const GeneratorConfig& config);

inline MultivariateSeries generate(const GeneratorConfig& config) {
  return generate_with_regimes(config).series;
}

/// Same as generate() for days before fork_day; from fork_day on, the random
/// streams come from branch_seed. Continuations of one config share an
/// identical history, so they sample the conditional future distribution.
GeneratedSeries generate_continuation(const GeneratorConfig& config, std::size_t fork_day,
                                      std::uint64_t branch_seed);

} // namespace mfp::data
