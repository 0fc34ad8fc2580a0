#ifndef SASA_SOLVER_HPP
#define SASA_SOLVER_HPP

#include <Eigen/Cholesky>

#include <memory>
#include <utility>
#include <vector>

#include "sasa/model.hpp"
#include "sasa/penalty.hpp"
#include "sasa/weights.hpp"

namespace sasa {

// All pairs (i, j), i < j, in lexicographic order. Row r of D is e_i - e_j
// for the r-th pair, so A = D (x) I_p maps stacked beta to pairwise
// differences.
class DifferenceStructure {
 public:
  explicit DifferenceStructure(Index n);

  Index n() const { return n_; }
  Index pair_count() const { return static_cast<Index>(pairs_.size()); }
  const std::vector<std::pair<Index, Index>>& pairs() const { return pairs_; }
  Index pair_index(Index i, Index j) const;

  MatrixXd dense_D() const;

  // B is p x n (column i = beta_i); returns p x pairs with columns b_i - b_j.
  MatrixXd apply_A(const MatrixXd& B) const;
  // U is p x pairs; returns p x n, the adjoint of apply_A.
  MatrixXd apply_At(const MatrixXd& U) const;
  // (n I - 1 1') (x) I_p applied to B (p x n), i.e. A'A without forming A.
  MatrixXd apply_AtA(const MatrixXd& B) const;

 private:
  Index n_;
  std::vector<std::pair<Index, Index>> pairs_;
};

DifferenceStructure build_difference_structure(Index n);

// Q_{Z,Omega} = Omega - Omega Z (Z'Omega Z)^-1 Z'Omega over the stacked
// observations (location-major, replicate order). For q = 0 this is Omega.
class ProjectionOperator {
 public:
  explicit ProjectionOperator(const Dataset& dataset);

  Index size() const { return omega_.size(); }
  VectorXd apply(const VectorXd& v) const;
  MatrixXd dense() const;
  const VectorXd& omega() const { return omega_; }

 private:
  MatrixXd Z_;
  VectorXd omega_;
  Eigen::LLT<MatrixXd> ZtOZ_;
  bool has_global_ = false;
};

ProjectionOperator projection_matrix(const Dataset& dataset);

// ADMM iterate. delta and v are stored p x pairs (one column per pair, the
// Delta / Upsilon layout), beta is n x p.
struct AdmmState {
  VectorXd eta;
  MatrixXd beta;
  MatrixXd delta;
  MatrixXd v;
  int iter = 0;
  std::vector<double> primal_residual;
  std::vector<double> dual_residual;
};

struct SasaFit {
  AdmmState state;
  Partition partition;
  MatrixXd alpha;  // K x p group means of beta rows
  bool converged = false;
  double objective = 0.0;
  double lambda = 0.0;

  int K() const { return partition.K(); }
};

struct InitMode {
  enum class Kind { per_location, ridge_fusion } kind = Kind::per_location;
  int groups = 0;        // K* for ridge_fusion
  double ridge = 1e-3;   // lambda_r for ridge_fusion

  static InitMode per_location() { return {}; }
  static InitMode ridge_fusion(int groups, double ridge = 1e-3) { return {Kind::ridge_fusion, groups, ridge}; }
};

// Fixed data, weights, penalty and vartheta. The beta-system
// X'QX + vartheta A'A does not depend on lambda or the iterate, so it is
// factored once here and reused by every fit along a lambda path.
class AdmmProblem {
 public:
  AdmmProblem(const Dataset& dataset, const WeightMatrix& weights, SolverConfig config,
              std::shared_ptr<const FusionPenalty> penalty = nullptr);

  const Dataset& dataset() const { return *dataset_; }
  const DifferenceStructure& differences() const { return diff_; }
  const SolverConfig& config() const { return config_; }
  const std::vector<double>& pair_weights() const { return pair_weights_; }

  AdmmState initialize(const InitMode& mode = InitMode::per_location()) const;

  MatrixXd update_beta(const AdmmState& state) const;
  VectorXd update_eta(const MatrixXd& beta) const;
  MatrixXd update_delta(const MatrixXd& beta, const MatrixXd& v, double lambda) const;
  MatrixXd update_v(const MatrixXd& beta, const MatrixXd& delta, const MatrixXd& v) const;

  SasaFit fit(double lambda, const AdmmState* init = nullptr) const;

  // Q_n(eta, beta) with the pairwise penalty at this lambda.
  double objective(const VectorXd& eta, const MatrixXd& beta, double lambda) const;

  // Normal-equation pieces, exposed for tests.
  const MatrixXd& XtQX() const { return XtQX_; }
  const VectorXd& XtQy() const { return XtQy_; }
  // Right-hand side of the beta-system for the given delta and v.
  VectorXd beta_rhs(const MatrixXd& delta, const MatrixXd& v) const;

 private:
  const Dataset* dataset_;
  SolverConfig config_;
  std::shared_ptr<const FusionPenalty> penalty_;
  DifferenceStructure diff_;
  std::vector<double> pair_weights_;

  MatrixXd XtQX_;
  VectorXd XtQy_;
  MatrixXd ZtOX_;  // q x np
  VectorXd ZtOy_;
  Eigen::LLT<MatrixXd> ZtOZ_;
  Eigen::LLT<MatrixXd> system_;
};

// Free-function forms of the update cycle. Each builds the problem state
// it needs; use AdmmProblem directly for repeated calls.
MatrixXd update_beta(const AdmmState& state, const Dataset& dataset, const DifferenceStructure& diff,
                     const SolverConfig& config);
VectorXd update_eta(const AdmmState& state, const Dataset& dataset);
MatrixXd update_delta(const AdmmState& state, const WeightMatrix& weights, const FusionPenalty& penalty,
                      double lambda, const SolverConfig& config);
MatrixXd update_v(const AdmmState& state, const DifferenceStructure& diff, const SolverConfig& config);

SasaFit fit(const Dataset& dataset, const WeightMatrix& weights, double lambda, const SolverConfig& config,
            const AdmmState* init = nullptr);

AdmmState initialize(const Dataset& dataset, const InitMode& mode = InitMode::per_location());

// Connected components of the graph of pairs with ||delta_ij|| <= group_tol,
// and the group means of beta.
std::pair<Partition, MatrixXd> extract_groups(const AdmmState& state, const SolverConfig& config);

// Oracle refit on an estimated partition.
Coefficients refit(const Dataset& dataset, const Partition& partition);

}  // namespace sasa

#endif  // SASA_SOLVER_HPP
