#include "sasa/simgen.hpp"

#include <cmath>

#include "sasa/oracle.hpp"
#include "sasa/parallel.hpp"

namespace sasa {

Setting parse_setting(const std::string& name) {
  if (name == "s1" || name == "S1") return Setting::s1;
  if (name == "s2" || name == "S2") return Setting::s2;
  if (name == "unbalanced") return Setting::unbalanced;
  if (name == "random") return Setting::random;
  throw InputError("unknown setting '" + name + "' (expected s1|s2|unbalanced|random)");
}

std::string to_string(Setting setting) {
  switch (setting) {
    case Setting::s1: return "s1";
    case Setting::s2: return "s2";
    case Setting::unbalanced: return "unbalanced";
    case Setting::random: return "random";
  }
  return "?";
}

void SimScenario::validate() const {
  if (rows < 1 || cols < 1) throw InputError("grid dimensions must be positive");
  if (ni < 1) throw InputError("replicates per location must be at least 1");
  if (!(sigma >= 0.0)) throw InputError("sigma must be nonnegative");
  if (!(rho >= 0.0 && rho < 1.0)) throw InputError("rho must lie in [0, 1)");
}

MatrixXd alpha_table(Setting setting) {
  MatrixXd a;
  switch (setting) {
    case Setting::s1:
    case Setting::random:
      a.resize(3, 2);
      a << 1.0, 1.0, 1.5, 1.5, 2.0, 2.0;
      break;
    case Setting::s2:
      a.resize(3, 2);
      a << 1.0, 1.0, 1.25, 1.25, 1.5, 1.5;
      break;
    case Setting::unbalanced:
      a.resize(4, 2);
      a << 1.0, 1.0, 1.5, 1.5, 2.0, 2.0, 2.5, 2.5;
      break;
  }
  return a;
}

Partition layout(Setting setting, int rows, int cols, std::mt19937_64* rng) {
  const int n = rows * cols;
  std::vector<int> labels(static_cast<std::size_t>(std::max(n, 0)));
  switch (setting) {
    case Setting::s1:
    case Setting::s2: {
      if (!((rows == 7 && cols == 7) || (rows == 10 && cols == 10)))
        throw InputError("fixed three-group layouts exist for 7x7 and 10x10 grids only");
      const int base = n / 3;
      const int first = base;
      const int second = n - 2 * base;
      for (int c = 0; c < n; ++c) labels[static_cast<std::size_t>(c)] = c < first ? 0 : (c < first + second ? 1 : 2);
      break;
    }
    case Setting::unbalanced: {
      if (rows != 10 || cols != 10) throw InputError("the unbalanced layout exists for the 10x10 grid only");
      int seen = 0;
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          int label;
          if (r < 3 && c < 3) label = 0;
          else if (r >= 7 && c >= 7) label = 3;
          else label = (seen++ < 41) ? 1 : 2;
          labels[static_cast<std::size_t>(r * cols + c)] = label;
        }
      }
      break;
    }
    case Setting::random: {
      if (rng == nullptr) throw InputError("random layout needs a random number generator");
      if (n < 1) throw InputError("grid dimensions must be positive");
      std::uniform_int_distribution<int> pick(0, 2);
      for (auto& l : labels) l = pick(*rng);
      break;
    }
  }
  return Partition(std::move(labels));
}

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t replicate) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (replicate + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Dataset simulate_responses(const Partition& partition, const MatrixXd& alpha, const VectorXd& eta, int ni,
                           double sigma, double rho, std::mt19937_64& rng) {
  if (alpha.rows() != partition.K()) throw InputError("alpha rows must match the partition's K");
  if (alpha.cols() != 2 || eta.size() != 5) throw InputError("simulation design uses q = 5 and p = 2");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.7);
  const double a = std::sqrt(rho);
  const double b = std::sqrt(1.0 - rho);
  const double bern_sd = std::sqrt(0.7 * 0.3);

  std::vector<LocationBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(partition.n()));
  for (Index i = 0; i < partition.n(); ++i) {
    LocationBlock blk{std::to_string(i + 1), VectorXd(ni), MatrixXd(ni, 5), MatrixXd(ni, 2)};
    const auto beta_i = alpha.row(partition.label(i)).transpose();
    for (int h = 0; h < ni; ++h) {
      blk.Z(h, 0) = 1.0;
      const double common = normal(rng);
      for (int k = 1; k < 5; ++k) blk.Z(h, k) = a * common + b * normal(rng);
      blk.X(h, 0) = normal(rng);
      blk.X(h, 1) = ((coin(rng) ? 1.0 : 0.0) - 0.7) / bern_sd;
      const double noise = sigma * normal(rng);
      blk.y(h) = blk.Z.row(h).dot(eta) + blk.X.row(h).dot(beta_i) + noise;
    }
    blocks.push_back(std::move(blk));
  }
  return Dataset(std::move(blocks));
}

std::pair<Dataset, SimTruth> generate(const Partition& partition, const MatrixXd& alpha, int ni, double sigma,
                                      double rho, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(1.0, 2.0);
  VectorXd eta(5);
  for (Index k = 0; k < 5; ++k) eta(k) = unif(rng);
  auto data = simulate_responses(partition, alpha, eta, ni, sigma, rho, rng);
  return {std::move(data), SimTruth{partition, alpha, eta}};
}

std::pair<Dataset, SimTruth> generate(const SimScenario& scenario) {
  scenario.validate();
  std::mt19937_64 rng(scenario.seed);
  // Random labels are exchangeable, so group k takes alpha row k in
  // first-appearance order.
  Partition part = layout(scenario.setting, scenario.rows, scenario.cols, &rng);
  const MatrixXd alpha = alpha_table(scenario.setting).topRows(part.K());
  std::uniform_real_distribution<double> unif(1.0, 2.0);
  VectorXd eta(5);
  for (Index k = 0; k < 5; ++k) eta(k) = unif(rng);
  auto data = simulate_responses(part, alpha, eta, scenario.ni, scenario.sigma, scenario.rho, rng);
  return {std::move(data), SimTruth{std::move(part), alpha, std::move(eta)}};
}

ReplicateResult run_replicate(const SimScenario& scenario, const MethodSpec& method, int replicate) {
  ReplicateResult row;
  row.replicate = replicate;
  row.seed = replicate_seed(scenario.seed, static_cast<std::uint64_t>(replicate));
  SimScenario sc = scenario;
  sc.seed = row.seed;
  try {
    auto [data, truth] = generate(sc);
    row.K_true = truth.partition.K();
    const auto graph = build_grid_adjacency(sc.rows, sc.cols, method.contiguity);
    const auto orders = neighbor_orders(graph);
    const TuneResult tuned = method.criterion == "cv"
                                 ? cross_validate(data, orders, method.kind, method.grid, method.folds, method.config)
                                 : select(data, orders, method.kind, method.grid, method.config);
    const auto& fit = tuned.best_fit;
    row.K = fit.K();
    row.lambda = tuned.best_lambda;
    row.psi = tuned.best_psi;
    row.converged = fit.converged;
    row.ari = adjusted_rand_index(fit.partition, truth.partition);
    const MatrixXd beta_true = truth.beta();
    row.rmse = rmse_beta(fit.state.beta, beta_true);
    row.rmse_refit = rmse_beta(refit(data, fit.partition).beta, beta_true);
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
  }
  return row;
}

ReplicateAggregate aggregate(const std::vector<ReplicateResult>& rows, int true_K) {
  ReplicateAggregate agg;
  std::vector<int> khats;
  std::vector<double> aris, rmses, refits;
  for (const auto& r : rows) {
    ++agg.replicates;
    if (r.failed) {
      ++agg.failures;
      continue;
    }
    khats.push_back(r.K);
    aris.push_back(r.ari);
    rmses.push_back(r.rmse);
    refits.push_back(r.rmse_refit);
  }
  if (khats.empty()) return agg;
  const auto ks = khat_summary(khats, true_K);
  const auto ari = mean_se(aris);
  const auto rmse = mean_se(rmses);
  const auto refit_ms = mean_se(refits);
  agg.metrics = MetricReport{ari.mean, rmse.mean, ks.mean, ks.se, ks.per};
  agg.ari_se = ari.se;
  agg.rmse_se = rmse.se;
  agg.rmse_refit = refit_ms.mean;
  agg.rmse_refit_se = refit_ms.se;
  return agg;
}

ReplicateRun run_replicates(const SimScenario& scenario, const MethodSpec& method, int n_reps, int jobs) {
  scenario.validate();
  if (n_reps < 1) throw InputError("n_reps must be at least 1");
  ReplicateRun run;
  run.rows.resize(static_cast<std::size_t>(n_reps));
  parallel_for(run.rows.size(), jobs,
               [&](std::size_t r) { run.rows[r] = run_replicate(scenario, method, static_cast<int>(r)); });
  const int true_K = scenario.setting == Setting::unbalanced ? 4 : 3;
  run.aggregate = aggregate(run.rows, true_K);
  return run;
}

}  // namespace sasa
