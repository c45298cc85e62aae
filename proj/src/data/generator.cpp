#include "mfp/data/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mfp/rng.hpp"

namespace mfp::data {

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& m) { throw DataError("generator config: " + m); };
  if (n_hours < 1) fail("n_hours must be >= 1");
  if (regimes.empty()) fail("at least one regime is required");
  if (!(regime_switch_prob >= 0.0 && regime_switch_prob <= 1.0)) {
    fail("regime_switch_prob must lie in [0, 1]");
  }
  if (!(daily_amp >= 0.0) || !(weekly_amp >= 0.0)) fail("amplitudes must be >= 0");
  if (!(noise_std >= 0.0)) fail("noise_std must be >= 0");
  for (const auto& r : regimes) {
    if (!(r.level >= 0.0) || !(r.daily_amplitude >= 0.0) || !std::isfinite(r.phase_hours)) {
      fail("regime levels and amplitudes must be >= 0");
    }
  }
  if (!(base_levels[0] >= 0.0)) fail("base approved count must be >= 0");
  if (!(base_levels[1] >= 0.0 && base_levels[1] <= 1.0)) fail("unique-card ratio must lie in [0, 1]");
  if (!(base_levels[2] >= 0.0)) fail("average ticket must be >= 0");
  if (!(base_levels[3] >= 0.0 && base_levels[3] <= 1.0)) fail("approval rate must lie in [0, 1]");
}

namespace {

HourStamp day_of(HourStamp hour) { return hour >= 0 ? hour / 24 : (hour - 23) / 24; }

GeneratedSeries run(const GeneratorConfig& c, std::size_t fork_day, std::uint64_t branch_seed) {
  c.validate();
  const std::size_t d = 4;
  GeneratedSeries out;
  auto& s = out.series;
  s.values.resize(static_cast<Eigen::Index>(c.n_hours), static_cast<Eigen::Index>(d));
  s.feature_names = merchant_features();
  s.start_hour = c.start_hour;
  s.merchant_id = c.merchant_id;

  const double two_pi = 2.0 * std::numbers::pi;
  const double base = c.base_levels[0];
  const HourStamp first_day = day_of(c.start_hour);
  std::size_t regime = 0;
  SplitMix64 rng(0);
  std::size_t day_index = std::numeric_limits<std::size_t>::max();

  for (std::size_t t = 0; t < c.n_hours; ++t) {
    const HourStamp hour = c.start_hour + static_cast<HourStamp>(t);
    const auto day = static_cast<std::size_t>(day_of(hour) - first_day);
    if (day != day_index) {
      day_index = day;
      const std::uint64_t stream_seed = day < fork_day ? c.seed : branch_seed;
      rng = SplitMix64(derive_seed(stream_seed, day));
      if (day > 0 && c.regimes.size() > 1 && rng.uniform() < c.regime_switch_prob) {
        const std::size_t step = 1 + rng.index(c.regimes.size() - 1);
        regime = (regime + step) % c.regimes.size();
      }
      out.day_regimes.push_back(regime);
    }
    const auto& r = c.regimes[regime];
    const double daily =
        std::cos(two_pi * (hour_of_day(hour) - 13.0 - r.phase_hours) / 24.0);
    const double weekly = std::cos(two_pi * (weekday(hour) - 5.0) / 7.0);
    const double mean = base * r.level * (1.0 + c.daily_amp * r.daily_amplitude * daily) *
                        (1.0 + c.weekly_amp * weekly);

    const double n1 = rng.normal(), n2 = rng.normal(), n3 = rng.normal(), n4 = rng.normal();
    const double approved = std::max(0.0, mean + c.noise_std * base * n1);
    const double unique = std::clamp(approved * c.base_levels[1] * (1.0 + 0.5 * c.noise_std * n2),
                                     0.0, approved);
    const double amount = std::max(0.0, approved * c.base_levels[2] * (1.0 + c.noise_std * n3));
    const double rate = std::clamp(c.base_levels[3] + 0.1 * c.noise_std * n4, 0.0, 1.0);

    const auto row = static_cast<Eigen::Index>(t);
    s.values(row, 0) = approved;
    s.values(row, 1) = unique;
    s.values(row, 2) = amount;
    s.values(row, 3) = rate;
  }
  return out;
}

} // namespace

GeneratedSeries generate_with_regimes(const GeneratorConfig& config) {
  return run(config, std::numeric_limits<std::size_t>::max(), 0);
}

GeneratedSeries generate_continuation(const GeneratorConfig& config, std::size_t fork_day,
                                      std::uint64_t branch_seed) {
  return run(config, fork_day, branch_seed);
}

} // namespace mfp::data
