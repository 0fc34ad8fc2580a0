#ifndef SASA_TUNING_HPP
#define SASA_TUNING_HPP

#include <optional>
#include <string>
#include <vector>

#include "sasa/graph.hpp"
#include "sasa/solver.hpp"
#include "sasa/weights.hpp"

namespace sasa {

struct TuneGrid {
  // Explicit lambda grid. When empty, each psi gets a data-adaptive grid of
  // nlambda log-spaced points in [lambda_min_ratio * lambda_max, lambda_max].
  std::vector<double> lambdas;
  std::vector<double> psis = kDefaultPsiGrid;
  double c0 = 0.2;
  int nlambda = 50;
  double lambda_min_ratio = 1e-3;
};

// log[n^-1 sum_i n_i^-1 sum_h r_ih^2] + C_n (log n / n)(K p + q),
// C_n = c0 log(log(n p + q)).
double bic_value(double residual_mean_square, int K, Index n, Index p, Index q, double c0 = 0.2);

// Modified BIC of a fit; -infinity (degenerate) when the residuals vanish.
double bic(const Dataset& dataset, const SasaFit& fit, double c0 = 0.2);

// n^-1 sum_i n_i^-1 sum_h r_ih^2
double residual_mean_square(const Dataset& dataset, const VectorXd& eta, const MatrixXd& beta);

struct PathPoint {
  double lambda = 0.0;
  std::optional<SasaFit> fit;  // empty when the fit failed
  std::string error;
};

// Fits in grid order, each warm-started from the previous successful fit.
std::vector<PathPoint> solve_path(const AdmmProblem& problem, const std::vector<double>& lambdas,
                                  const AdmmState* init = nullptr);
std::vector<PathPoint> solve_path(const Dataset& dataset, const WeightMatrix& weights,
                                  const std::vector<double>& lambdas, const SolverConfig& config);

// Smallest lambda of a doubling sequence whose fit has a single group.
double find_lambda_max(const AdmmProblem& problem);

std::vector<double> log_spaced(double lo, double hi, int count);
std::vector<double> default_lambda_grid(const AdmmProblem& problem, int nlambda = 50, double min_ratio = 1e-3);

struct TuneCell {
  double psi = 0.0;
  double lambda = 0.0;
  double score = 0.0;  // BIC or mean validation error
  int K = 0;
  bool converged = false;
  bool failed = false;
};

struct TuneResult {
  std::string criterion;
  WeightKind kind = WeightKind::equal;
  std::vector<TuneCell> surface;
  double best_lambda = 0.0;
  double best_psi = 0.0;
  SasaFit best_fit;
};

// Weights for a scheme, computing beta-tilde from the per-location
// initializer when the scheme needs it.
WeightMatrix weights_for(const Dataset& dataset, const NeighborOrders& orders, const WeightSpec& spec);

// BIC over the (lambda, psi) grid. equal weights ignore psi and use a
// single psi cell. Ties go to the larger lambda.
TuneResult select(const Dataset& dataset, const NeighborOrders& orders, WeightKind kind, const TuneGrid& grid,
                  const SolverConfig& config, int jobs = 1);

// Replicates of each location are split into `folds` contiguous parts;
// fold j validates on part j of every location.
std::vector<std::vector<std::vector<Index>>> cv_folds(const Dataset& dataset, int folds);

TuneResult cross_validate(const Dataset& dataset, const NeighborOrders& orders, WeightKind kind,
                          const TuneGrid& grid, int folds, const SolverConfig& config, int jobs = 1);

}  // namespace sasa

#endif  // SASA_TUNING_HPP
