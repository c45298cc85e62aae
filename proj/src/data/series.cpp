#include "mfp/data/series.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace mfp::data {

namespace chr = std::chrono;

HourStamp parse_timestamp(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  const std::string str(text);
  char tail[8] = {0};
  int consumed = 0;
  bool ok = false;
  if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s,
                  &consumed) == 6) {
    const std::string rest = str.substr(static_cast<std::size_t>(consumed));
    ok = rest.empty() || rest == "Z";
  } else if (std::sscanf(str.c_str(), "%4d-%2d-%2d %2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s,
                         &consumed) == 6) {
    ok = static_cast<std::size_t>(consumed) == str.size();
  } else if (std::sscanf(str.c_str(), "%4d-%2d-%2d%n%1s", &y, &mo, &d, &consumed, tail) == 3) {
    ok = static_cast<std::size_t>(consumed) == str.size();
  }
  const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)},
                                chr::day{static_cast<unsigned>(d)}};
  if (!ok || !ymd.ok() || h < 0 || h > 23 || mi != 0 || s != 0) {
    throw DataError("invalid hourly timestamp '" + str + "'");
  }
  const auto days = chr::sys_days{ymd}.time_since_epoch().count();
  return static_cast<HourStamp>(days) * 24 + h;
}

std::string format_timestamp(HourStamp hour) {
  const HourStamp days = hour >= 0 ? hour / 24 : (hour - 23) / 24;
  const int h = static_cast<int>(hour - days * 24);
  const chr::year_month_day ymd{chr::sys_days{chr::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00Z", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h);
  return buf;
}

int weekday(HourStamp hour) noexcept {
  const HourStamp days = hour >= 0 ? hour / 24 : (hour - 23) / 24;
  return static_cast<int>(chr::weekday{chr::sys_days{chr::days{days}}}.c_encoding());
}

int hour_of_day(HourStamp hour) noexcept {
  const auto h = hour % 24;
  return static_cast<int>(h < 0 ? h + 24 : h);
}

MultivariateSeries MultivariateSeries::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > length()) {
    throw DataError("slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                    ") exceeds series length " + std::to_string(length()));
  }
  MultivariateSeries out;
  out.values = values.middleRows(static_cast<Eigen::Index>(begin),
                                 static_cast<Eigen::Index>(count));
  out.feature_names = feature_names;
  out.start_hour = start_hour + static_cast<HourStamp>(begin);
  out.merchant_id = merchant_id;
  return out;
}

Eigen::MatrixXd MultivariateSeries::window(std::size_t begin, std::size_t count) const {
  if (begin + count > length()) {
    throw DataError("window [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                    ") exceeds series length " + std::to_string(length()));
  }
  return values.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
}

void MultivariateSeries::validate() const {
  if (feature_names.size() != features()) {
    throw DataError("series has " + std::to_string(features()) + " columns but " +
                    std::to_string(feature_names.size()) + " feature names");
  }
  for (std::size_t j = 0; j < features(); ++j) {
    const auto& name = feature_names[j];
    const bool rate = name == "approval_rate";
    const bool count = name == "approved_count" || name == "unique_cards" || name == "amount_sum";
    for (std::size_t t = 0; t < length(); ++t) {
      const double v = values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
      if (!std::isfinite(v)) {
        throw DataError("non-finite " + name + " at row " + std::to_string(t));
      }
      if (rate && (v < 0.0 || v > 1.0)) {
        throw DataError("approval_rate " + std::to_string(v) + " outside [0, 1] at row " +
                        std::to_string(t));
      }
      if (count && v < 0.0) {
        throw DataError("negative " + name + " at row " + std::to_string(t));
      }
    }
  }
}

Split split_by_date(const MultivariateSeries& series, HourStamp train_end, std::size_t warmup) {
  if (train_end <= series.start_hour || train_end > series.end_hour()) {
    throw DataError("split boundary " + format_timestamp(train_end) + " outside series span [" +
                    format_timestamp(series.start_hour) + ", " +
                    format_timestamp(series.end_hour()) + "]");
  }
  const auto cut = static_cast<std::size_t>(train_end - series.start_hour);
  if (warmup > cut) {
    throw DataError("warm-up of " + std::to_string(warmup) + " hours exceeds the " +
                    std::to_string(cut) + "-hour train span");
  }
  Split s;
  s.train = series.slice(0, cut);
  s.test = series.slice(cut - warmup, series.length() - cut + warmup);
  s.warmup = warmup;
  return s;
}

} // namespace mfp::data
