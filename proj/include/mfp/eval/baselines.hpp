#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Core>

#include "mfp/data/series.hpp"

namespace mfp::eval {

/// Row vector of a history x d window, time-major: element t*d + j.
Eigen::RowVectorXd flatten_window(const Eigen::MatrixXd& window);

/// Nearest-neighbor forecaster over every length-`history` subsequence of the
/// training series whose continuation is complete. Distance is the squared
/// Euclidean distance between per-dimension z-normalized windows, summed over
/// dimensions; ties go to the earliest subsequence.
class NearestNeighbor {
public:
  NearestNeighbor(const data::MultivariateSeries& train, std::size_t history, std::size_t horizon,
                  double epsilon = 1e-8);

  /// query: history x d; returns d x horizon in raw units.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& query) const;
  /// Start row of the best match for `query`.
  std::size_t best_match(const Eigen::MatrixXd& query) const;

  std::size_t candidates() const noexcept { return candidates_; }

private:
  Eigen::MatrixXd train_; // n x d
  std::size_t history_;
  std::size_t horizon_;
  double epsilon_;
  std::size_t candidates_;
};

/// One ridge regressor per output coordinate on flattened history windows.
/// The intercept is not penalized.
struct RidgeModel {
  Eigen::MatrixXd coef;       ///< (history*d) x (d*horizon)
  Eigen::VectorXd intercept;  ///< d*horizon; output index j*horizon + t
  std::size_t history = 0;
  std::size_t horizon = 0;
  std::size_t features = 0;
  double lambda = 1.0;

  /// query: history x d; returns d x horizon.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& query) const;
};

/// Closed-form fit of min ||Y - X W - 1 b'||^2 + lambda ||W||^2.
/// X: samples x inputs, Y: samples x outputs.
void solve_ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda,
                 Eigen::MatrixXd& coef, Eigen::VectorXd& intercept);

/// Fits on every stride-1 window of the training series.
RidgeModel fit_ridge(std::span<const data::MultivariateSeries> train, std::size_t history,
                     std::size_t horizon, double lambda = 1.0);
RidgeModel fit_ridge(const data::MultivariateSeries& train, std::size_t history,
                     std::size_t horizon, double lambda = 1.0);

} // namespace mfp::eval
