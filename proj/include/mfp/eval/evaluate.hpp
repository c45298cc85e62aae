#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfp/data/series.hpp"
#include "mfp/eval/baselines.hpp"
#include "mfp/forecaster/model.hpp"

namespace mfp::eval {

/// Anything that maps a history x d window to f candidate futures (d x horizon).
class Predictor {
public:
  virtual ~Predictor() = default;
  virtual std::string id() const = 0;
  virtual std::size_t futures() const = 0;
  virtual std::vector<Eigen::MatrixXd> predict(const Eigen::MatrixXd& history) const = 0;
};

template <class T>
class ForecasterPredictor final : public Predictor {
public:
  ForecasterPredictor(const Forecaster<T>& model, std::string id)
      : model_(model), id_(std::move(id)) {}
  std::string id() const override { return id_; }
  std::size_t futures() const override { return model_.config().futures; }
  std::vector<Eigen::MatrixXd> predict(const Eigen::MatrixXd& history) const override {
    return model_.predict(history).futures;
  }

private:
  const Forecaster<T>& model_;
  std::string id_;
};

class NearestNeighborPredictor final : public Predictor {
public:
  explicit NearestNeighborPredictor(NearestNeighbor nn) : nn_(std::move(nn)) {}
  std::string id() const override { return "nearest_neighbor"; }
  std::size_t futures() const override { return 1; }
  std::vector<Eigen::MatrixXd> predict(const Eigen::MatrixXd& history) const override {
    return {nn_.predict(history)};
  }

private:
  NearestNeighbor nn_;
};

class RidgePredictor final : public Predictor {
public:
  explicit RidgePredictor(RidgeModel model) : model_(std::move(model)) {}
  std::string id() const override { return "ridge"; }
  std::size_t futures() const override { return 1; }
  std::vector<Eigen::MatrixXd> predict(const Eigen::MatrixXd& history) const override {
    return {model_.predict(history)};
  }

private:
  RidgeModel model_;
};

/// NRMSE used for every method: rmse between the row-z-normalized
/// prediction and the row-z-normalized truth.
double eval_nrmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth, double epsilon);

struct WindowRecord {
  std::size_t start = 0;          ///< first predicted row of the test series
  data::HourStamp start_hour = 0; ///< timestamp of that row
  std::vector<double> rmse;       ///< per future
  std::vector<double> nrmse;      ///< per future
  std::size_t oracle_rmse_index = 0;
  std::size_t oracle_nrmse_index = 0;
  Eigen::MatrixXd truth;                ///< d x horizon
  std::vector<Eigen::MatrixXd> futures; ///< f matrices, d x horizon

  double oracle_rmse() const { return rmse[oracle_rmse_index]; }
  double oracle_nrmse() const { return nrmse[oracle_nrmse_index]; }
};

struct EvalReport {
  std::string model_id;
  std::string dataset;
  std::size_t futures = 0;
  std::size_t history = 0;
  std::size_t horizon = 0;
  std::size_t features = 0;
  std::vector<std::string> feature_names;
  /// Mean over windows of the per-window mean over futures.
  double rmse = 0.0;
  double nrmse = 0.0;
  /// Mean over windows of the per-window minimum over futures.
  double oracle_rmse = 0.0;
  double oracle_nrmse = 0.0;
  /// Mean over windows when always picking future i.
  std::vector<double> fixed_rmse;
  std::vector<double> fixed_nrmse;
  std::vector<WindowRecord> per_window;

  static constexpr const char* kAggregation =
      "mean over windows; rmse/nrmse average the futures of a window, oracle metrics take "
      "their minimum; nrmse compares row-z-normalized prediction and truth";

  /// JSON object without the per-window predictions.
  std::string to_json() const;
  /// One row per window: start,timestamp,oracle indices, per-future errors.
  std::string to_csv() const;
  /// Plot-ready: one row per predicted hour, truth and future_1..future_f per feature.
  std::string predictions_csv() const;
};

/// Windows whose n_h-hour targets start at rows history, history + horizon, ...
/// of `test`; the first `history` rows are warm-up context.
EvalReport evaluate_rolling(const Predictor& predictor, const data::MultivariateSeries& test,
                            std::size_t history, std::size_t horizon, double epsilon = 1e-8);

/// Re-aggregates a report using only the first k futures of every window.
EvalReport truncate_futures(const EvalReport& report, std::size_t k);

} // namespace mfp::eval
