#include "mfp/eval/baselines.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfp/training/batch.hpp"

namespace mfp::eval {

Eigen::RowVectorXd flatten_window(const Eigen::MatrixXd& window) {
  const Eigen::Index n = window.rows(), d = window.cols();
  Eigen::RowVectorXd out(n * d);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out(t * d + j) = window(t, j);
    }
  }
  return out;
}

namespace {

/// z-normalized column `j` of rows [start, start + n).
void znorm_column(const Eigen::MatrixXd& m, Eigen::Index start, Eigen::Index n, Eigen::Index j,
                  double epsilon, double* out) {
  double mean = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) mean += m(start + t, j);
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double c = m(start + t, j) - mean;
    var += c * c;
  }
  const double sd = std::max(std::sqrt(var / static_cast<double>(n)), epsilon);
  for (Eigen::Index t = 0; t < n; ++t) out[t] = (m(start + t, j) - mean) / sd;
}

} // namespace

NearestNeighbor::NearestNeighbor(const data::MultivariateSeries& train, std::size_t history,
                                 std::size_t horizon, double epsilon)
    : train_(train.values), history_(history), horizon_(horizon), epsilon_(epsilon),
      candidates_(window_count(train, history, horizon)) {
  if (candidates_ == 0) {
    throw data::DataError("nearest neighbor: training series has " +
                          std::to_string(train.length()) + " hours, need at least " +
                          std::to_string(history + horizon));
  }
}

std::size_t NearestNeighbor::best_match(const Eigen::MatrixXd& query) const {
  const auto n = static_cast<Eigen::Index>(history_);
  const Eigen::Index d = train_.cols();
  if (query.rows() != n || query.cols() != d) {
    throw data::DataError("nearest neighbor: query must be " + std::to_string(history_) + " x " +
                          std::to_string(d));
  }
  Eigen::MatrixXd zq(n, d);
  for (Eigen::Index j = 0; j < d; ++j) znorm_column(query, 0, n, j, epsilon_, zq.col(j).data());

  std::vector<double> zc(static_cast<std::size_t>(n));
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < candidates_; ++s) {
    double dist = 0.0;
    for (Eigen::Index j = 0; j < d && dist < best_dist; ++j) {
      znorm_column(train_, static_cast<Eigen::Index>(s), n, j, epsilon_, zc.data());
      for (Eigen::Index t = 0; t < n; ++t) {
        const double e = zc[static_cast<std::size_t>(t)] - zq(t, j);
        dist += e * e;
      }
    }
    // An abandoned candidate already has dist >= best_dist.
    if (dist < best_dist) {
      best_dist = dist;
      best = s;
    }
  }
  return best;
}

Eigen::MatrixXd NearestNeighbor::predict(const Eigen::MatrixXd& query) const {
  const std::size_t s = best_match(query);
  return train_.middleRows(static_cast<Eigen::Index>(s + history_),
                           static_cast<Eigen::Index>(horizon_))
      .transpose();
}

void solve_ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda,
                 Eigen::MatrixXd& coef, Eigen::VectorXd& intercept) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("ridge: lambda must be > 0");
  }
  if (X.rows() != Y.rows() || X.rows() < 1) {
    throw std::invalid_argument("ridge: X and Y need the same, non-zero number of rows");
  }
  const Eigen::RowVectorXd xm = X.colwise().mean();
  const Eigen::RowVectorXd ym = Y.colwise().mean();
  const Eigen::MatrixXd Xc = X.rowwise() - xm;
  const Eigen::MatrixXd Yc = Y.rowwise() - ym;
  Eigen::MatrixXd A = Xc.transpose() * Xc;
  A.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("ridge: normal equations are not positive definite");
  }
  coef = llt.solve(Xc.transpose() * Yc);
  intercept = (ym - xm * coef).transpose();
}

RidgeModel fit_ridge(std::span<const data::MultivariateSeries> train, std::size_t history,
                     std::size_t horizon, double lambda) {
  std::size_t rows = 0;
  for (const auto& s : train) rows += window_count(s, history, horizon);
  if (rows == 0) {
    throw data::DataError("ridge: no complete training window of " +
                          std::to_string(history + horizon) + " hours");
  }
  const auto d = static_cast<Eigen::Index>(train.front().features());
  const auto np = static_cast<Eigen::Index>(history);
  const auto nh = static_cast<Eigen::Index>(horizon);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows), np * d);
  Eigen::MatrixXd Y(static_cast<Eigen::Index>(rows), d * nh);
  Eigen::Index r = 0;
  for (const auto& s : train) {
    if (static_cast<Eigen::Index>(s.features()) != d) {
      throw data::DataError("ridge: training series disagree on the feature count");
    }
    const std::size_t count = window_count(s, history, horizon);
    for (std::size_t k = 0; k < count; ++k, ++r) {
      X.row(r) = flatten_window(s.window(k, history));
      const Eigen::MatrixXd target = s.window(k + history, horizon);
      for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index t = 0; t < nh; ++t) Y(r, j * nh + t) = target(t, j);
      }
    }
  }
  RidgeModel m;
  m.history = history;
  m.horizon = horizon;
  m.features = static_cast<std::size_t>(d);
  m.lambda = lambda;
  solve_ridge(X, Y, lambda, m.coef, m.intercept);
  return m;
}

RidgeModel fit_ridge(const data::MultivariateSeries& train, std::size_t history,
                     std::size_t horizon, double lambda) {
  return fit_ridge(std::span(&train, 1), history, horizon, lambda);
}

Eigen::MatrixXd RidgeModel::predict(const Eigen::MatrixXd& query) const {
  if (static_cast<std::size_t>(query.rows()) != history ||
      static_cast<std::size_t>(query.cols()) != features) {
    throw data::DataError("ridge: query must be " + std::to_string(history) + " x " +
                          std::to_string(features));
  }
  const Eigen::VectorXd y = (flatten_window(query) * coef).transpose() + intercept;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(features), static_cast<Eigen::Index>(horizon));
  for (Eigen::Index j = 0; j < out.rows(); ++j) {
    for (Eigen::Index t = 0; t < out.cols(); ++t) out(j, t) = y(j * out.cols() + t);
  }
  return out;
}

} // namespace mfp::eval
