#include "mfp/eval/evaluate.hpp"

#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "mfp/training/metrics.hpp"

namespace mfp::eval {

double eval_nrmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth, double epsilon) {
  return rmse(z_normalize_rows(pred, epsilon), z_normalize_rows(truth, epsilon));
}

namespace {

std::size_t argmin_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[best]) best = i;
  }
  return best;
}

void aggregate(EvalReport& r) {
  const std::size_t f = r.futures;
  r.rmse = r.nrmse = r.oracle_rmse = r.oracle_nrmse = 0.0;
  r.fixed_rmse.assign(f, 0.0);
  r.fixed_nrmse.assign(f, 0.0);
  for (const auto& w : r.per_window) {
    double sr = 0.0, sn = 0.0;
    for (std::size_t i = 0; i < f; ++i) {
      sr += w.rmse[i];
      sn += w.nrmse[i];
      r.fixed_rmse[i] += w.rmse[i];
      r.fixed_nrmse[i] += w.nrmse[i];
    }
    r.rmse += sr / static_cast<double>(f);
    r.nrmse += sn / static_cast<double>(f);
    r.oracle_rmse += w.oracle_rmse();
    r.oracle_nrmse += w.oracle_nrmse();
  }
  const double n = static_cast<double>(r.per_window.size());
  r.rmse /= n;
  r.nrmse /= n;
  r.oracle_rmse /= n;
  r.oracle_nrmse /= n;
  for (std::size_t i = 0; i < f; ++i) {
    r.fixed_rmse[i] /= n;
    r.fixed_nrmse[i] /= n;
  }
}

} // namespace

EvalReport evaluate_rolling(const Predictor& predictor, const data::MultivariateSeries& test,
                            std::size_t history, std::size_t horizon, double epsilon) {
  if (history == 0 || horizon == 0) {
    throw std::invalid_argument("evaluate_rolling: history and horizon must be positive");
  }
  if (test.length() < history + horizon) {
    throw data::DataError("evaluate_rolling: test series has " + std::to_string(test.length()) +
                          " hours, need at least " + std::to_string(history + horizon));
  }
  EvalReport r;
  r.model_id = predictor.id();
  r.dataset = test.merchant_id;
  r.futures = predictor.futures();
  r.history = history;
  r.horizon = horizon;
  r.features = test.features();
  r.feature_names = test.feature_names;
  for (std::size_t start = history; start + horizon <= test.length(); start += horizon) {
    WindowRecord w;
    w.start = start;
    w.start_hour = test.start_hour + static_cast<data::HourStamp>(start);
    w.truth = test.window(start, horizon).transpose();
    w.futures = predictor.predict(test.window(start - history, history));
    if (w.futures.size() != r.futures) {
      throw std::logic_error("predictor returned " + std::to_string(w.futures.size()) +
                             " futures, expected " + std::to_string(r.futures));
    }
    for (const auto& p : w.futures) {
      w.rmse.push_back(rmse(p, w.truth));
      w.nrmse.push_back(eval_nrmse(p, w.truth, epsilon));
    }
    w.oracle_rmse_index = argmin_first(w.rmse);
    w.oracle_nrmse_index = argmin_first(w.nrmse);
    r.per_window.push_back(std::move(w));
  }
  aggregate(r);
  return r;
}

EvalReport truncate_futures(const EvalReport& report, std::size_t k) {
  if (k < 1 || k > report.futures) {
    throw std::invalid_argument("truncate_futures: k must lie in [1, " +
                                std::to_string(report.futures) + "]");
  }
  EvalReport r = report;
  r.futures = k;
  for (auto& w : r.per_window) {
    w.rmse.resize(k);
    w.nrmse.resize(k);
    w.futures.resize(k);
    w.oracle_rmse_index = argmin_first(w.rmse);
    w.oracle_nrmse_index = argmin_first(w.nrmse);
  }
  aggregate(r);
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["model_id"] = model_id;
  j["dataset"] = dataset;
  j["futures"] = futures;
  j["history"] = history;
  j["horizon"] = horizon;
  j["features"] = feature_names;
  j["windows"] = per_window.size();
  j["aggregation"] = kAggregation;
  j["rmse"] = rmse;
  j["nrmse"] = nrmse;
  j["oracle_rmse"] = oracle_rmse;
  j["oracle_nrmse"] = oracle_nrmse;
  j["fixed_index_rmse"] = fixed_rmse;
  j["fixed_index_nrmse"] = fixed_nrmse;
  auto& pw = j["per_window"] = nlohmann::ordered_json::array();
  for (const auto& w : per_window) {
    nlohmann::ordered_json o;
    o["start"] = w.start;
    o["timestamp"] = data::format_timestamp(w.start_hour);
    o["oracle_rmse_index"] = w.oracle_rmse_index + 1;
    o["oracle_nrmse_index"] = w.oracle_nrmse_index + 1;
    o["rmse"] = w.rmse;
    o["nrmse"] = w.nrmse;
    pw.push_back(std::move(o));
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::string out = "window,start,timestamp,oracle_rmse_index,oracle_nrmse_index,oracle_rmse,"
                    "oracle_nrmse";
  for (std::size_t i = 1; i <= futures; ++i) {
    out += ",rmse_" + std::to_string(i) + ",nrmse_" + std::to_string(i);
  }
  out += '\n';
  char buf[64];
  for (std::size_t k = 0; k < per_window.size(); ++k) {
    const auto& w = per_window[k];
    out += std::to_string(k) + "," + std::to_string(w.start) + "," +
           data::format_timestamp(w.start_hour) + "," + std::to_string(w.oracle_rmse_index + 1) +
           "," + std::to_string(w.oracle_nrmse_index + 1);
    std::snprintf(buf, sizeof buf, ",%.9g,%.9g", w.oracle_rmse(), w.oracle_nrmse());
    out += buf;
    for (std::size_t i = 0; i < futures; ++i) {
      std::snprintf(buf, sizeof buf, ",%.9g,%.9g", w.rmse[i], w.nrmse[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string EvalReport::predictions_csv() const {
  std::string out = "window,hour,timestamp";
  for (const auto& name : feature_names) {
    out += "," + name + "_truth";
    for (std::size_t i = 1; i <= futures; ++i) out += "," + name + "_future_" + std::to_string(i);
  }
  out += '\n';
  char buf[48];
  for (std::size_t k = 0; k < per_window.size(); ++k) {
    const auto& w = per_window[k];
    for (Eigen::Index t = 0; t < w.truth.cols(); ++t) {
      out += std::to_string(k) + "," + std::to_string(w.start + static_cast<std::size_t>(t)) +
             "," + data::format_timestamp(w.start_hour + t);
      for (Eigen::Index j = 0; j < w.truth.rows(); ++j) {
        std::snprintf(buf, sizeof buf, ",%.9g", w.truth(j, t));
        out += buf;
        for (const auto& p : w.futures) {
          std::snprintf(buf, sizeof buf, ",%.9g", p(j, t));
          out += buf;
        }
      }
      out += '\n';
    }
  }
  return out;
}

} // namespace mfp::eval
