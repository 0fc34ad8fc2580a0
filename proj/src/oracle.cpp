#include "sasa/oracle.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace sasa {

namespace {

constexpr double kRankTol = 1e-13;

Eigen::LLT<MatrixXd> factor_or_throw(const MatrixXd& H) {
  Eigen::LLT<MatrixXd> llt(H);
  if (llt.info() != Eigen::Success || !(llt.rcond() > kRankTol))
    throw NumericalError("partition design rank-deficient (U'OmegaU is singular)");
  return llt;
}

}  // namespace

PartitionDesign partition_design(const Dataset& dataset, const Partition& partition) {
  if (partition.n() != dataset.n()) throw InputError("partition size does not match dataset");
  const Index q = dataset.q();
  const Index p = dataset.p();
  const Index dim = q + partition.K() * p;
  PartitionDesign d{MatrixXd::Zero(dim, dim), VectorXd::Zero(dim), MatrixXd::Zero(dim, dim)};
  for (Index i = 0; i < dataset.n(); ++i) {
    const auto& b = dataset.block(i);
    const double w = 1.0 / static_cast<double>(b.size());
    const Index off = q + partition.label(i) * p;
    const MatrixXd XtX = b.X.transpose() * b.X;
    d.UtOU.block(off, off, p, p) += w * XtX;
    d.UtOOU.block(off, off, p, p) += w * w * XtX;
    d.UtOy.segment(off, p) += w * (b.X.transpose() * b.y);
    if (q > 0) {
      const MatrixXd ZtZ = b.Z.transpose() * b.Z;
      const MatrixXd ZtX = b.Z.transpose() * b.X;
      d.UtOU.topLeftCorner(q, q) += w * ZtZ;
      d.UtOOU.topLeftCorner(q, q) += w * w * ZtZ;
      d.UtOU.block(0, off, q, p) += w * ZtX;
      d.UtOOU.block(0, off, q, p) += w * w * ZtX;
      d.UtOy.head(q) += w * (b.Z.transpose() * b.y);
    }
  }
  if (q > 0) {
    d.UtOU.bottomLeftCorner(dim - q, q) = d.UtOU.topRightCorner(q, dim - q).transpose();
    d.UtOOU.bottomLeftCorner(dim - q, q) = d.UtOOU.topRightCorner(q, dim - q).transpose();
  }
  return d;
}

OracleEstimate oracle_estimate(const Dataset& dataset, const Partition& partition) {
  const auto design = partition_design(dataset, partition);
  const VectorXd theta = factor_or_throw(design.UtOU).solve(design.UtOy);
  const Index q = dataset.q();
  const Index p = dataset.p();
  OracleEstimate est;
  est.eta = theta.head(q);
  est.alpha.resize(partition.K(), p);
  for (int k = 0; k < partition.K(); ++k) est.alpha.row(k) = theta.segment(q + k * p, p).transpose();
  est.beta = expand_groups(partition, est.alpha);
  return est;
}

double sigma2_hat(const Dataset& dataset, const VectorXd& eta, const MatrixXd& beta, int K) {
  const Index df = dataset.m() - dataset.q() - static_cast<Index>(K) * dataset.p();
  if (df <= 0) throw InputError("sigma2_hat: nonpositive residual degrees of freedom (m - q - K p)");
  double rss = 0.0;
  for (Index i = 0; i < dataset.n(); ++i) rss += dataset.residual(i, eta, beta).squaredNorm();
  return rss / static_cast<double>(df);
}

VectorXd coef_se(const Dataset& dataset, const Partition& partition, double sigma2) {
  if (sigma2 < 0.0) throw InputError("coef_se: sigma2 must be nonnegative");
  const auto design = partition_design(dataset, partition);
  const auto llt = factor_or_throw(design.UtOU);
  const MatrixXd Hinv = llt.solve(MatrixXd::Identity(design.UtOU.rows(), design.UtOU.cols()));
  const MatrixXd cov = Hinv * design.UtOOU * Hinv;
  return (std::sqrt(sigma2) * cov.diagonal().cwiseMax(0.0).cwiseSqrt()).eval();
}

OracleFit oracle_fit(const Dataset& dataset, const Partition& partition) {
  auto est = oracle_estimate(dataset, partition);
  OracleFit fit;
  fit.sigma2 = sigma2_hat(dataset, est.eta, est.beta, partition.K());
  fit.se = coef_se(dataset, partition, fit.sigma2);
  fit.eta = std::move(est.eta);
  fit.alpha = std::move(est.alpha);
  fit.beta = std::move(est.beta);
  return fit;
}

double min_group_gap(const MatrixXd& alpha) {
  if (alpha.rows() < 2) throw InputError("gap undefined for fewer than two groups");
  double gap = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < alpha.rows(); ++k)
    for (Index l = k + 1; l < alpha.rows(); ++l) gap = std::min(gap, (alpha.row(k) - alpha.row(l)).norm());
  return gap;
}

}  // namespace sasa
