#ifndef SASA_SIMGEN_HPP
#define SASA_SIMGEN_HPP

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sasa/graph.hpp"
#include "sasa/metrics.hpp"
#include "sasa/model.hpp"
#include "sasa/tuning.hpp"
#include "sasa/weights.hpp"

namespace sasa {

enum class Setting { s1, s2, unbalanced, random };

Setting parse_setting(const std::string& name);
std::string to_string(Setting setting);

struct SimScenario {
  Setting setting = Setting::s1;
  int rows = 7;
  int cols = 7;
  int ni = 10;
  std::uint64_t seed = 1;
  double sigma = 0.5;
  double rho = 0.3;

  void validate() const;
};

struct SimTruth {
  Partition partition;
  MatrixXd alpha;  // K x p
  VectorXd eta;    // q

  MatrixXd beta() const { return expand_groups(partition, alpha); }
};

// Group coefficient levels of each setting (rows = groups, p = 2).
MatrixXd alpha_table(Setting setting);

// Fixed layouts: S1/S2 split the row-major cell order into three
// consecutive bands (7x7: 16/17/16, 10x10: 33/34/33). Unbalanced (10x10
// only): 3x3 corner blocks top-left (group 1) and bottom-right (group 4),
// the remaining cells split row-major into two 41-cell regions. Random:
// each cell uniform over three labels using rng.
Partition layout(Setting setting, int rows, int cols, std::mt19937_64* rng = nullptr);

// Derives the RNG seed of replicate r from a base seed (splitmix64).
std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t replicate);

// Draws eta ~ U[1,2]^5 and responses for the given truth layout.
// Covariates: z = (1, z2..z5) equicorrelated normal (rho), x1 ~ N(0,1),
// x2 = standardized Bernoulli(0.7); errors N(0, sigma^2).
Dataset simulate_responses(const Partition& partition, const MatrixXd& alpha, const VectorXd& eta, int ni,
                           double sigma, double rho, std::mt19937_64& rng);

std::pair<Dataset, SimTruth> generate(const SimScenario& scenario);

// Generic variant for custom layouts and coefficient tables.
std::pair<Dataset, SimTruth> generate(const Partition& partition, const MatrixXd& alpha, int ni, double sigma,
                                      double rho, std::uint64_t seed);

struct MethodSpec {
  WeightKind kind = WeightKind::sp;
  std::string criterion = "bic";  // bic | cv
  int folds = 10;
  Contiguity contiguity = Contiguity::rook;
  TuneGrid grid;
  SolverConfig config;
};

struct ReplicateResult {
  int replicate = 0;
  std::uint64_t seed = 0;
  int K_true = 0;
  int K = 0;
  double ari = 0.0;
  double rmse = 0.0;
  double rmse_refit = 0.0;
  double lambda = 0.0;
  double psi = 0.0;
  bool converged = false;
  bool failed = false;
  std::string error;
};

struct ReplicateAggregate {
  MetricReport metrics;
  double ari_se = 0.0;
  double rmse_se = 0.0;
  double rmse_refit = 0.0;
  double rmse_refit_se = 0.0;
  int replicates = 0;
  int failures = 0;
};

struct ReplicateRun {
  std::vector<ReplicateResult> rows;
  ReplicateAggregate aggregate;
};

ReplicateResult run_replicate(const SimScenario& scenario, const MethodSpec& method, int replicate);

// Replicate r uses seed replicate_seed(scenario.seed, r). Failures are
// recorded per row and excluded from the aggregate.
ReplicateRun run_replicates(const SimScenario& scenario, const MethodSpec& method, int n_reps, int jobs = 1);

ReplicateAggregate aggregate(const std::vector<ReplicateResult>& rows, int true_K);

}  // namespace sasa

#endif  // SASA_SIMGEN_HPP
