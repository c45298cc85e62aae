#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace mfp::data {

class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Hours since 1970-01-01T00:00Z.
using HourStamp = std::int64_t;

/// "YYYY-MM-DDTHH:00:00Z"; also accepts "YYYY-MM-DD HH:MM:SS" and a bare date.
/// Minutes and seconds must be zero.
HourStamp parse_timestamp(std::string_view text);
std::string format_timestamp(HourStamp hour);
/// 0 = Sunday ... 6 = Saturday.
int weekday(HourStamp hour) noexcept;
int hour_of_day(HourStamp hour) noexcept;

inline const std::vector<std::string>& merchant_features() {
  static const std::vector<std::string> names{"approved_count", "unique_cards", "amount_sum",
                                              "approval_rate"};
  return names;
}

/// Hourly, gap-free multivariate series; row t is hour start_hour + t.
struct MultivariateSeries {
  Eigen::MatrixXd values; ///< n x d
  std::vector<std::string> feature_names;
  HourStamp start_hour = 0;
  std::string merchant_id;

  std::size_t length() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t features() const noexcept { return static_cast<std::size_t>(values.cols()); }
  HourStamp end_hour() const noexcept { return start_hour + static_cast<HourStamp>(length()); }

  /// Rows [begin, begin + count) as a new series with shifted start.
  MultivariateSeries slice(std::size_t begin, std::size_t count) const;
  /// Rows [begin, begin + count) as a count x d matrix.
  Eigen::MatrixXd window(std::size_t begin, std::size_t count) const;

  /// Throws DataError when approval_rate leaves [0, 1], a count-like feature
  /// is negative, a value is non-finite, or names do not match columns.
  void validate() const;
};

/// Train prefix and test suffix; the test carries `warmup` trailing train
/// hours so its first window can be predicted.
struct Split {
  MultivariateSeries train;
  MultivariateSeries test;
  std::size_t warmup = 0;

  std::size_t test_hours() const noexcept { return test.length() - warmup; }
};

/// Splits at train_end (first test hour). train_end may equal end_hour().
Split split_by_date(const MultivariateSeries& series, HourStamp train_end, std::size_t warmup);

} // namespace mfp::data
