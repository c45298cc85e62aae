#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfp/eval/evaluate.hpp"

namespace mfp::eval {

class CompareError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Methods x {RMSE, NRMSE} x datasets, using each report's oracle metrics.
/// With more than one dataset an "avg" column group is appended.
struct ComparisonTable {
  std::vector<std::string> methods;
  std::vector<std::string> datasets; ///< column groups, "avg" last when present
  /// values[m][c] = {rmse, nrmse}; NaN when a method lacks that dataset.
  std::vector<std::vector<std::array<double, 2>>> values;
  /// best[c][k]: row index of the lowest value of metric k in column group c.
  std::vector<std::array<std::size_t, 2>> best;

  /// Numeric table plus a final "best" row naming the winning method per column.
  std::string to_csv() const;
  /// Aligned text; the best value of each column carries a '*'.
  std::string to_text() const;
};

/// Throws CompareError when reports disagree on history, horizon, features,
/// or, for one dataset, on the evaluated windows; or when a (method, dataset)
/// pair repeats.
ComparisonTable compare(const std::vector<EvalReport>& reports);

} // namespace mfp::eval
