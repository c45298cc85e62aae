#include "mfp/eval/compare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace mfp::eval {

ComparisonTable compare(const std::vector<EvalReport>& reports) {
  if (reports.empty()) {
    throw CompareError("compare: no reports");
  }
  const auto& ref = reports.front();
  ComparisonTable t;
  std::vector<const EvalReport*> first_of_dataset;
  for (const auto& r : reports) {
    if (r.history != ref.history || r.horizon != ref.horizon || r.features != ref.features) {
      throw CompareError("compare: report '" + r.model_id + "' uses a different history, "
                         "horizon or feature count");
    }
    if (std::find(t.methods.begin(), t.methods.end(), r.model_id) == t.methods.end()) {
      t.methods.push_back(r.model_id);
    }
    const auto it = std::find(t.datasets.begin(), t.datasets.end(), r.dataset);
    if (it == t.datasets.end()) {
      t.datasets.push_back(r.dataset);
      first_of_dataset.push_back(&r);
    } else {
      const auto& o = *first_of_dataset[static_cast<std::size_t>(it - t.datasets.begin())];
      bool same = o.per_window.size() == r.per_window.size();
      for (std::size_t k = 0; same && k < r.per_window.size(); ++k) {
        same = o.per_window[k].start_hour == r.per_window[k].start_hour;
      }
      if (!same) {
        throw CompareError("compare: reports for dataset '" + r.dataset +
                           "' cover different test windows");
      }
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t nd = t.datasets.size();
  t.values.assign(t.methods.size(), std::vector<std::array<double, 2>>(nd, {nan, nan}));
  for (const auto& r : reports) {
    const auto m = static_cast<std::size_t>(
        std::find(t.methods.begin(), t.methods.end(), r.model_id) - t.methods.begin());
    const auto c = static_cast<std::size_t>(
        std::find(t.datasets.begin(), t.datasets.end(), r.dataset) - t.datasets.begin());
    if (!std::isnan(t.values[m][c][0])) {
      throw CompareError("compare: duplicate report for method '" + r.model_id +
                         "' on dataset '" + r.dataset + "'");
    }
    t.values[m][c] = {r.oracle_rmse, r.oracle_nrmse};
  }
  if (nd > 1) {
    t.datasets.push_back("avg");
    for (auto& row : t.values) {
      std::array<double, 2> avg{0.0, 0.0};
      for (std::size_t c = 0; c < nd; ++c) {
        avg[0] += row[c][0] / static_cast<double>(nd);
        avg[1] += row[c][1] / static_cast<double>(nd);
      }
      row.push_back(avg);
    }
  }
  t.best.assign(t.datasets.size(), {0, 0});
  for (std::size_t c = 0; c < t.datasets.size(); ++c) {
    for (std::size_t k = 0; k < 2; ++k) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < t.methods.size(); ++m) {
        const double v = t.values[m][c][k];
        if (!std::isnan(v) && v < best) {
          best = v;
          t.best[c][k] = m;
        }
      }
    }
  }
  return t;
}

std::string ComparisonTable::to_csv() const {
  std::string out = "method";
  for (const auto& d : datasets) out += "," + d + "_rmse," + d + "_nrmse";
  out += '\n';
  char buf[48];
  for (std::size_t m = 0; m < methods.size(); ++m) {
    out += methods[m];
    for (const auto& v : values[m]) {
      std::snprintf(buf, sizeof buf, ",%.9g,%.9g", v[0], v[1]);
      out += buf;
    }
    out += '\n';
  }
  out += "best";
  for (const auto& b : best) out += "," + methods[b[0]] + "," + methods[b[1]];
  out += '\n';
  return out;
}

std::string ComparisonTable::to_text() const {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"method"};
  for (const auto& d : datasets) {
    header.push_back(d + " RMSE");
    header.push_back(d + " NRMSE");
  }
  cells.push_back(header);
  char buf[48];
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<std::string> row{methods[m]};
    for (std::size_t c = 0; c < values[m].size(); ++c) {
      for (std::size_t k = 0; k < 2; ++k) {
        std::snprintf(buf, sizeof buf, "%.4f%s", values[m][c][k], best[c][k] == m ? "*" : "");
        row.emplace_back(buf);
      }
    }
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i == 0) {
        out += row[i] + std::string(width[i] - row[i].size(), ' ');
      } else {
        out += "  " + std::string(width[i] - row[i].size(), ' ') + row[i];
      }
    }
    out += '\n';
  }
  return out;
}

} // namespace mfp::eval
