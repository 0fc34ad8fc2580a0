#include "sasa/tuning.hpp"

#include <cmath>
#include <limits>

#include "sasa/parallel.hpp"

namespace sasa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LocationBlock take_rows(const LocationBlock& b, const std::vector<Index>& rows) {
  const auto k = static_cast<Index>(rows.size());
  LocationBlock out{b.location_id, VectorXd(k), MatrixXd(k, b.Z.cols()), MatrixXd(k, b.X.cols())};
  for (Index r = 0; r < k; ++r) {
    const Index h = rows[static_cast<std::size_t>(r)];
    out.y(r) = b.y(h);
    out.Z.row(r) = b.Z.row(h);
    out.X.row(r) = b.X.row(h);
  }
  return out;
}

// Candidate (score, lambda) beats incumbent if strictly lower, or equal and
// at a larger lambda.
bool better(double score, double lambda, double best_score, double best_lambda) {
  if (score < best_score) return true;
  return score == best_score && lambda > best_lambda;
}

struct PsiOutcome {
  std::vector<TuneCell> cells;
  std::vector<PathPoint> path;
};

std::vector<double> psi_values(WeightKind kind, const TuneGrid& grid) {
  if (grid.psis.empty()) throw InputError("psi grid must not be empty");
  for (double psi : grid.psis)
    if (!(psi >= 0.0)) throw InputError("psi values must be nonnegative");
  if (kind == WeightKind::equal) return {grid.psis.front()};
  return grid.psis;
}

void check_grid(const TuneGrid& grid) {
  if (!(grid.c0 > 0.0)) throw InputError("BIC constant c0 must be positive");
  for (std::size_t k = 0; k < grid.lambdas.size(); ++k) {
    if (!(grid.lambdas[k] >= 0.0)) throw InputError("lambda values must be nonnegative");
    if (k > 0 && grid.lambdas[k] < grid.lambdas[k - 1]) throw InputError("lambda grid must be sorted ascending");
  }
  if (grid.lambdas.empty() && grid.nlambda < 1) throw InputError("nlambda must be at least 1");
}

// Pick the best eligible cell: converged cells if any, otherwise any
// successful cell.
std::optional<std::size_t> pick_best(const std::vector<TuneCell>& cells) {
  for (bool require_converged : {true, false}) {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto& c = cells[k];
      if (c.failed || (require_converged && !c.converged) || std::isnan(c.score)) continue;
      if (!best || better(c.score, c.lambda, cells[*best].score, cells[*best].lambda)) best = k;
    }
    if (best) return best;
  }
  return std::nullopt;
}

}  // namespace

double residual_mean_square(const Dataset& dataset, const VectorXd& eta, const MatrixXd& beta) {
  double total = 0.0;
  for (Index i = 0; i < dataset.n(); ++i)
    total += dataset.residual(i, eta, beta).squaredNorm() / static_cast<double>(dataset.replicates(i));
  return total / static_cast<double>(dataset.n());
}

double bic_value(double rms, int K, Index n, Index p, Index q, double c0) {
  if (rms < 0.0) throw InputError("residual mean square must be nonnegative");
  if (rms == 0.0) return -kInf;
  const auto nd = static_cast<double>(n);
  const double Cn = c0 * std::log(std::log(static_cast<double>(n * p + q)));
  return std::log(rms) + Cn * std::log(nd) / nd * static_cast<double>(K * p + q);
}

double bic(const Dataset& dataset, const SasaFit& fit, double c0) {
  return bic_value(residual_mean_square(dataset, fit.state.eta, fit.state.beta), fit.K(), dataset.n(), dataset.p(),
                   dataset.q(), c0);
}

std::vector<PathPoint> solve_path(const AdmmProblem& problem, const std::vector<double>& lambdas,
                                  const AdmmState* init) {
  if (lambdas.empty()) throw InputError("lambda grid must not be empty");
  std::vector<PathPoint> path;
  path.reserve(lambdas.size());
  std::optional<AdmmState> warm;
  if (init != nullptr) warm = *init;
  else warm = problem.initialize();
  for (double lambda : lambdas) {
    PathPoint point;
    point.lambda = lambda;
    try {
      point.fit = problem.fit(lambda, &*warm);
      warm = point.fit->state;
    } catch (const NumericalError& e) {
      point.error = e.what();
    }
    path.push_back(std::move(point));
  }
  return path;
}

std::vector<PathPoint> solve_path(const Dataset& dataset, const WeightMatrix& weights,
                                  const std::vector<double>& lambdas, const SolverConfig& config) {
  const AdmmProblem problem(dataset, weights, config);
  return solve_path(problem, lambdas);
}

double find_lambda_max(const AdmmProblem& problem) {
  AdmmState state = problem.initialize();
  const MatrixXd& beta = state.beta;
  double spread = 0.0;
  for (Index i = 0; i < beta.rows(); ++i)
    for (Index j = i + 1; j < beta.rows(); ++j) spread = std::max(spread, (beta.row(i) - beta.row(j)).norm());
  double lambda = std::max(0.05 * spread, 1e-8);
  for (int step = 0; step < 64; ++step, lambda *= 2.0) {
    auto f = problem.fit(lambda, &state);
    if (f.K() == 1) return lambda;
    state = std::move(f.state);
  }
  throw NumericalError("could not find a lambda that fuses all locations into one group");
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw InputError("log_spaced: need 0 < lo <= hi and count >= 1");
  if (count == 1) return {hi};
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = std::exp(a + (b - a) * k / (count - 1));
  out.back() = hi;
  return out;
}

std::vector<double> default_lambda_grid(const AdmmProblem& problem, int nlambda, double min_ratio) {
  const double lmax = find_lambda_max(problem);
  return log_spaced(min_ratio * lmax, lmax, nlambda);
}

WeightMatrix weights_for(const Dataset& dataset, const NeighborOrders& orders, const WeightSpec& spec) {
  if (orders.a.rows() != dataset.n()) throw InputError("adjacency size does not match dataset");
  if (!spec.requires_init()) return compute_weights(spec, &orders, nullptr);
  const MatrixXd beta_init = initialize(dataset).beta;
  return compute_weights(spec, &orders, &beta_init);
}

TuneResult select(const Dataset& dataset, const NeighborOrders& orders, WeightKind kind, const TuneGrid& grid,
                  const SolverConfig& config, int jobs) {
  check_grid(grid);
  const auto psis = psi_values(kind, grid);
  // beta-tilde is computed once and shared across psi.
  std::optional<MatrixXd> beta_init;
  if (WeightSpec{kind, 0.0}.requires_init()) beta_init = initialize(dataset).beta;

  std::vector<PsiOutcome> outcomes(psis.size());
  parallel_for(psis.size(), jobs, [&](std::size_t k) {
    const WeightSpec spec{kind, psis[k]};
    const auto weights = compute_weights(spec, &orders, beta_init ? &*beta_init : nullptr);
    const AdmmProblem problem(dataset, weights, config);
    const auto lambdas = grid.lambdas.empty() ? default_lambda_grid(problem, grid.nlambda, grid.lambda_min_ratio)
                                              : grid.lambdas;
    auto& out = outcomes[k];
    out.path = solve_path(problem, lambdas);
    for (const auto& point : out.path) {
      TuneCell cell{psis[k], point.lambda, kInf, 0, false, !point.fit.has_value()};
      if (point.fit) {
        cell.score = bic(dataset, *point.fit, grid.c0);
        cell.K = point.fit->K();
        cell.converged = point.fit->converged;
      }
      out.cells.push_back(cell);
    }
  });

  TuneResult result;
  result.criterion = "bic";
  result.kind = kind;
  std::vector<std::pair<std::size_t, std::size_t>> where;
  for (std::size_t k = 0; k < outcomes.size(); ++k)
    for (std::size_t l = 0; l < outcomes[k].cells.size(); ++l) {
      result.surface.push_back(outcomes[k].cells[l]);
      where.emplace_back(k, l);
    }
  const auto best = pick_best(result.surface);
  if (!best) throw NumericalError("tuning failed: every (lambda, psi) cell failed");
  const auto [k, l] = where[*best];
  result.best_lambda = result.surface[*best].lambda;
  result.best_psi = result.surface[*best].psi;
  result.best_fit = std::move(*outcomes[k].path[l].fit);
  return result;
}

std::vector<std::vector<std::vector<Index>>> cv_folds(const Dataset& dataset, int folds) {
  if (folds < 2) throw InputError("cross validation needs at least 2 folds");
  std::vector<std::vector<std::vector<Index>>> out(static_cast<std::size_t>(folds),
                                                   std::vector<std::vector<Index>>(static_cast<std::size_t>(dataset.n())));
  for (Index i = 0; i < dataset.n(); ++i) {
    const Index ni = dataset.replicates(i);
    if (ni < folds)
      throw InputError("location '" + dataset.block(i).location_id + "' has " + std::to_string(ni) +
                       " replicates, fewer than " + std::to_string(folds) + " folds; use fewer folds");
    // Contiguous parts, the first ni % folds parts one larger.
    Index start = 0;
    for (int j = 0; j < folds; ++j) {
      const Index len = ni / folds + (j < ni % folds ? 1 : 0);
      auto& part = out[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      for (Index h = start; h < start + len; ++h) part.push_back(h);
      start += len;
    }
  }
  return out;
}

TuneResult cross_validate(const Dataset& dataset, const NeighborOrders& orders, WeightKind kind,
                          const TuneGrid& grid, int folds, const SolverConfig& config, int jobs) {
  check_grid(grid);
  const auto parts = cv_folds(dataset, folds);
  const auto psis = psi_values(kind, grid);
  const bool needs_init = WeightSpec{kind, 0.0}.requires_init();

  // Full-data paths fix each psi's lambda grid and supply K and the final fit.
  std::optional<MatrixXd> beta_init;
  if (needs_init) beta_init = initialize(dataset).beta;
  std::vector<std::vector<double>> grids(psis.size());
  std::vector<std::vector<PathPoint>> full_paths(psis.size());
  parallel_for(psis.size(), jobs, [&](std::size_t k) {
    const auto weights = compute_weights({kind, psis[k]}, &orders, beta_init ? &*beta_init : nullptr);
    const AdmmProblem problem(dataset, weights, config);
    grids[k] = grid.lambdas.empty() ? default_lambda_grid(problem, grid.nlambda, grid.lambda_min_ratio)
                                    : grid.lambdas;
    full_paths[k] = solve_path(problem, grids[k]);
  });

  // errors[k][f][l]: mean squared validation error of psi k, fold f, lambda l.
  const auto nf = static_cast<std::size_t>(folds);
  std::vector<std::vector<std::vector<double>>> errors(psis.size(), std::vector<std::vector<double>>(nf));
  parallel_for(psis.size() * nf, jobs, [&](std::size_t task) {
    const std::size_t k = task / nf;
    const std::size_t f = task % nf;
    std::vector<LocationBlock> train;
    std::vector<LocationBlock> valid;
    for (Index i = 0; i < dataset.n(); ++i) {
      const auto& held = parts[f][static_cast<std::size_t>(i)];
      std::vector<Index> keep;
      for (Index h = 0, next = 0; h < dataset.replicates(i); ++h) {
        if (next < static_cast<Index>(held.size()) && held[static_cast<std::size_t>(next)] == h) ++next;
        else keep.push_back(h);
      }
      train.push_back(take_rows(dataset.block(i), keep));
      valid.push_back(take_rows(dataset.block(i), held));
    }
    const Dataset train_set(std::move(train));
    std::optional<MatrixXd> train_init;
    if (needs_init) train_init = initialize(train_set).beta;
    const auto weights = compute_weights({kind, psis[k]}, &orders, train_init ? &*train_init : nullptr);
    const AdmmProblem problem(train_set, weights, config);
    const auto path = solve_path(problem, grids[k]);
    auto& err = errors[k][f];
    for (const auto& point : path) {
      if (!point.fit) {
        err.push_back(kInf);
        continue;
      }
      double sse = 0.0;
      Index count = 0;
      for (Index i = 0; i < dataset.n(); ++i) {
        const auto& vb = valid[static_cast<std::size_t>(i)];
        VectorXd r = vb.y - vb.X * point.fit->state.beta.row(i).transpose();
        if (dataset.q() > 0) r -= vb.Z * point.fit->state.eta;
        sse += r.squaredNorm();
        count += vb.size();
      }
      err.push_back(sse / static_cast<double>(count));
    }
  });

  TuneResult result;
  result.criterion = "cv";
  result.kind = kind;
  std::vector<std::pair<std::size_t, std::size_t>> where;
  for (std::size_t k = 0; k < psis.size(); ++k) {
    for (std::size_t l = 0; l < grids[k].size(); ++l) {
      TuneCell cell{psis[k], grids[k][l], 0.0, 0, false, false};
      for (std::size_t f = 0; f < nf; ++f) cell.score += errors[k][f][l];
      cell.score /= static_cast<double>(folds);
      const auto& full = full_paths[k][l];
      cell.failed = !full.fit.has_value() || !std::isfinite(cell.score);
      if (full.fit) {
        cell.K = full.fit->K();
        cell.converged = full.fit->converged;
      }
      result.surface.push_back(cell);
      where.emplace_back(k, l);
    }
  }
  const auto best = pick_best(result.surface);
  if (!best) throw NumericalError("cross validation failed: every (lambda, psi) cell failed");
  const auto [k, l] = where[*best];
  result.best_lambda = result.surface[*best].lambda;
  result.best_psi = result.surface[*best].psi;
  result.best_fit = std::move(*full_paths[k][l].fit);
  return result;
}

}  // namespace sasa
