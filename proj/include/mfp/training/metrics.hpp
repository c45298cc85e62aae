#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "mfp/forecaster/model.hpp"

namespace mfp {

class MetricError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Per column: (x - mean) / max(std, epsilon), population std.
Eigen::MatrixXd z_normalize(const Eigen::MatrixXd& series, double epsilon = 1e-8);
/// Same transform applied to each row (features x time layout).
Eigen::MatrixXd z_normalize_rows(const Eigen::MatrixXd& m, double epsilon = 1e-8);

/// sqrt of the mean squared error over all entries.
double rmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

/// rmse(shape_pred, z-normalized truth); both d x horizon, rows normalized.
double nrmse(const Eigen::MatrixXd& shape_pred, const Eigen::MatrixXd& truth,
             double epsilon = 1e-8);

/// 0-based index of the shape prediction with the lowest nrmse; ties go to the
/// lowest index.
std::size_t oracle_index(const FutureSet& futures, const Eigen::MatrixXd& truth,
                         double epsilon = 1e-8);
std::size_t oracle_index(const std::vector<Eigen::MatrixXd>& shape_preds,
                         const Eigen::MatrixXd& truth, double epsilon = 1e-8);

struct LossRecord {
  std::size_t iteration = 0;
  double total_loss = 0.0;
  double rmse_term = 0.0;
  double nrmse_term = 0.0;
  std::vector<std::size_t> oracle_histogram; ///< per future
};

/// rmse(futures[i]) + gamma * nrmse(shape_preds[i]) for one window.
LossRecord compute_loss(const FutureSet& futures, const Eigen::MatrixXd& truth,
                        std::size_t oracle, double gamma, double epsilon = 1e-8);

} // namespace mfp
