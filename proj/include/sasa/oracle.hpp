#ifndef SASA_ORACLE_HPP
#define SASA_ORACLE_HPP

#include "sasa/model.hpp"

namespace sasa {

// Weighted least squares with a known partition: beta_i = alpha_{g(i)},
// U = (Z, X W), weights Omega = diag(1/n_i).
struct OracleEstimate {
  VectorXd eta;    // q
  MatrixXd alpha;  // K x p
  MatrixXd beta;   // n x p, rows expanded from alpha
};

struct OracleFit {
  VectorXd eta;
  MatrixXd alpha;
  MatrixXd beta;
  double sigma2 = 0.0;
  // Standard errors ordered as (eta_1..eta_q, alpha_1 (p entries), ..., alpha_K).
  VectorXd se;
};

// Normal-equation blocks U'Omega U, U'Omega y and U'Omega^2 U.
struct PartitionDesign {
  MatrixXd UtOU;
  VectorXd UtOy;
  MatrixXd UtOOU;
};

PartitionDesign partition_design(const Dataset& dataset, const Partition& partition);

OracleEstimate oracle_estimate(const Dataset& dataset, const Partition& partition);

// Estimate plus the residual variance and sandwich standard errors. Needs
// m - q - K p > 0.
OracleFit oracle_fit(const Dataset& dataset, const Partition& partition);

// (m - q - K p)^-1 sum of squared residuals.
double sigma2_hat(const Dataset& dataset, const VectorXd& eta, const MatrixXd& beta, int K);

// sigma * sqrt(diag((U'OU)^-1 U'OOU (U'OU)^-1))
VectorXd coef_se(const Dataset& dataset, const Partition& partition, double sigma2);

// min_{k != k'} ||alpha_k - alpha_k'||. Needs at least two rows.
double min_group_gap(const MatrixXd& alpha);

}  // namespace sasa

#endif  // SASA_ORACLE_HPP
