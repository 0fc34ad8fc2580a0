#ifndef SASA_METRICS_HPP
#define SASA_METRICS_HPP

#include <Eigen/Core>

#include <vector>

#include "sasa/model.hpp"

namespace sasa {

// Hubert-Arabie adjusted Rand index. Can be negative; 1 iff the partitions
// agree up to relabeling. Two all-singleton or two single-group partitions
// give 1.
double adjusted_rand_index(const Partition& a, const Partition& b);

// sqrt(n^-1 sum_i ||beta_hat_i - beta_i||^2)
double rmse_beta(const MatrixXd& beta_hat, const MatrixXd& beta_true);

struct KhatSummary {
  double mean = 0.0;
  double se = 0.0;   // standard error of the mean; 0 for a single value
  double per = 0.0;  // fraction equal to the true K
};

KhatSummary khat_summary(const std::vector<int>& khats, int true_K);

// Mean and standard error of the mean of arbitrary replicate values.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
MeanSe mean_se(const std::vector<double>& values);

struct MetricReport {
  double ari = 0.0;
  double rmse_beta = 0.0;
  double khat_mean = 0.0;
  double khat_se = 0.0;
  double per = 0.0;
};

}  // namespace sasa

#endif  // SASA_METRICS_HPP
