#include "mfp/training/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfp {

namespace {

void require_same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw MetricError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                      std::to_string(b.cols()));
  }
}

} // namespace

Eigen::MatrixXd z_normalize(const Eigen::MatrixXd& series, double epsilon) {
  if (series.rows() < 1) {
    throw MetricError("z_normalize: empty series");
  }
  Eigen::MatrixXd out(series.rows(), series.cols());
  const double n = static_cast<double>(series.rows());
  for (Eigen::Index j = 0; j < series.cols(); ++j) {
    const auto col = series.col(j);
    const double mean = col.sum() / n;
    const double var = (col.array() - mean).square().sum() / n;
    const double sd = std::max(std::sqrt(var), epsilon);
    out.col(j) = (col.array() - mean) / sd;
  }
  return out;
}

Eigen::MatrixXd z_normalize_rows(const Eigen::MatrixXd& m, double epsilon) {
  return z_normalize(m.transpose(), epsilon).transpose();
}

double rmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  require_same(pred, truth, "rmse");
  if (pred.size() == 0) {
    throw MetricError("rmse: empty input");
  }
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

double nrmse(const Eigen::MatrixXd& shape_pred, const Eigen::MatrixXd& truth, double epsilon) {
  require_same(shape_pred, truth, "nrmse");
  return rmse(shape_pred, z_normalize_rows(truth, epsilon));
}

std::size_t oracle_index(const std::vector<Eigen::MatrixXd>& shape_preds,
                         const Eigen::MatrixXd& truth, double epsilon) {
  if (shape_preds.empty()) {
    throw MetricError("oracle_index: no futures");
  }
  const Eigen::MatrixXd z = z_normalize_rows(truth, epsilon);
  std::size_t best = 0;
  double best_err = 0.0;
  for (std::size_t i = 0; i < shape_preds.size(); ++i) {
    const double e = rmse(shape_preds[i], z);
    if (i == 0 || e < best_err) {
      best = i;
      best_err = e;
    }
  }
  return best;
}

std::size_t oracle_index(const FutureSet& futures, const Eigen::MatrixXd& truth, double epsilon) {
  return oracle_index(futures.shape_preds, truth, epsilon);
}

LossRecord compute_loss(const FutureSet& futures, const Eigen::MatrixXd& truth,
                        std::size_t oracle, double gamma, double epsilon) {
  if (oracle >= futures.size()) {
    throw MetricError("compute_loss: oracle index " + std::to_string(oracle) +
                      " out of range for " + std::to_string(futures.size()) + " futures");
  }
  LossRecord r;
  r.rmse_term = rmse(futures.futures[oracle], truth);
  r.nrmse_term = nrmse(futures.shape_preds[oracle], truth, epsilon);
  r.total_loss = r.rmse_term + gamma * r.nrmse_term;
  r.oracle_histogram.assign(futures.size(), 0);
  r.oracle_histogram[oracle] = 1;
  return r;
}

} // namespace mfp
