#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "sasa/graph.hpp"
#include "sasa/tuning.hpp"

using namespace sasa;

namespace {

Dataset three_groups(std::uint64_t seed, int ni = 12, double noise = 0.2) {
  MatrixXd levels(3, 2);
  levels << 0.0, 0.0, 2.0, 2.0, 4.0, 4.0;
  std::vector<int> labels;
  for (int i = 0; i < 9; ++i) labels.push_back(i / 3);
  return test::random_dataset(9, 2, 2, ni, ni, seed, test::grouped_beta(labels, levels), noise);
}

}  // namespace

TEST_CASE("bic on a hand instance") {
  const double expected = std::log(0.25) + 0.2 * std::log(std::log(4.0)) * (std::log(4.0) / 4.0) * 2.0;
  CHECK(bic_value(0.25, 2, 4, 1, 0) == doctest::Approx(expected));
  CHECK(bic_value(0.0, 2, 4, 1, 0) == -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(bic_value(-1.0, 2, 4, 1, 0), InputError);
}

TEST_CASE("bic of a fit uses its residuals and group count") {
  const auto d = three_groups(1);
  const auto f = fit(d, equal_weights(9), 0.3, SolverConfig{});
  const double rms = residual_mean_square(d, f.state.eta, f.state.beta);
  CHECK(bic(d, f) == doctest::Approx(bic_value(rms, f.K(), 9, 2, 2)));
}

TEST_CASE("log spaced grid") {
  const auto g = log_spaced(0.01, 1.0, 3);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(0.01));
  CHECK(g[1] == doctest::Approx(0.1));
  CHECK(g[2] == 1.0);
  CHECK(log_spaced(0.5, 2.0, 1) == std::vector<double>{2.0});
  CHECK_THROWS_AS(log_spaced(0.0, 1.0, 3), InputError);
}

TEST_CASE("lambda max fuses every location") {
  const auto d = three_groups(2);
  const AdmmProblem prob(d, equal_weights(9), SolverConfig{});
  const double lmax = find_lambda_max(prob);
  CHECK(prob.fit(lmax).K() == 1);
  const auto grid = default_lambda_grid(prob, 10);
  CHECK(grid.size() == 10);
  CHECK(grid.back() == doctest::Approx(lmax));
  CHECK(grid.front() == doctest::Approx(1e-3 * lmax));
}

TEST_CASE("solution path warm starts along the grid") {
  const auto d = three_groups(3);
  const std::vector<double> lambdas{0.01, 0.1, 0.5, 2.0, 10.0};
  const auto path = solve_path(d, equal_weights(9), lambdas, SolverConfig{});
  REQUIRE(path.size() == lambdas.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    REQUIRE(path[k].fit.has_value());
    CHECK(path[k].lambda == lambdas[k]);
  }
  CHECK(path.front().fit->K() > 3);
  CHECK(path.back().fit->K() == 1);
  CHECK_THROWS_AS(solve_path(d, equal_weights(9), {}, SolverConfig{}), InputError);
}

TEST_CASE("bic selection recovers clear groups") {
  const auto d = three_groups(4);
  const auto orders = neighbor_orders(build_grid_adjacency(3, 3));
  TuneGrid grid;
  grid.nlambda = 25;
  for (WeightKind kind : {WeightKind::equal, WeightKind::sp, WeightKind::reg}) {
    const auto r = select(d, orders, kind, grid, SolverConfig{});
    CHECK(r.best_fit.K() == 3);
    CHECK(r.criterion == "bic");
    CHECK(r.surface.size() == (kind == WeightKind::equal ? 25u : 100u));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : r.surface)
      if (c.converged && !c.failed) best = std::min(best, c.score);
    CHECK(bic(d, r.best_fit) == doctest::Approx(best));
  }
}

TEST_CASE("selection prefers the larger lambda on ties") {
  const auto d = three_groups(5);
  const auto orders = neighbor_orders(build_grid_adjacency(3, 3));
  TuneGrid grid;
  // a plateau of identical fits: every lambda past lambda_max fuses all
  grid.lambdas = {50.0, 60.0, 70.0};
  grid.psis = {1.0};
  const auto r = select(d, orders, WeightKind::equal, grid, SolverConfig{});
  CHECK(r.best_fit.K() == 1);
  CHECK(r.best_lambda == 70.0);
}

TEST_CASE("tuning grid checks") {
  const auto d = three_groups(6);
  const auto orders = neighbor_orders(build_grid_adjacency(3, 3));
  TuneGrid grid;
  grid.lambdas = {0.5, 0.1};
  CHECK_THROWS_AS(select(d, orders, WeightKind::equal, grid, SolverConfig{}), InputError);
  grid.lambdas = {};
  grid.psis = {};
  CHECK_THROWS_AS(select(d, orders, WeightKind::sp, grid, SolverConfig{}), InputError);
}

TEST_CASE("cross-validation folds are contiguous and cover each location") {
  const auto d = test::random_dataset(4, 1, 1, 10, 13, 7);
  const auto f = cv_folds(d, 4);
  REQUIRE(f.size() == 4);
  for (Index i = 0; i < d.n(); ++i) {
    std::vector<Index> all;
    for (const auto& fold : f) {
      const auto& part = fold[static_cast<std::size_t>(i)];
      CHECK_FALSE(part.empty());
      for (std::size_t k = 1; k < part.size(); ++k) CHECK(part[k] == part[k - 1] + 1);
      all.insert(all.end(), part.begin(), part.end());
    }
    REQUIRE(static_cast<Index>(all.size()) == d.replicates(i));
    for (Index h = 0; h < d.replicates(i); ++h) CHECK(all[static_cast<std::size_t>(h)] == h);
  }
  CHECK_THROWS_AS(cv_folds(d, 1), InputError);
  CHECK_THROWS_AS(cv_folds(d, 11), InputError);
}

TEST_CASE("cross validation recovers clear groups") {
  const auto d = three_groups(8, 10);
  const auto orders = neighbor_orders(build_grid_adjacency(3, 3));
  TuneGrid grid;
  grid.nlambda = 15;
  grid.psis = {1.0};
  const auto r = cross_validate(d, orders, WeightKind::sp, grid, 5, SolverConfig{});
  CHECK(r.criterion == "cv");
  CHECK(r.surface.size() == 15);
  CHECK(r.best_fit.K() == 3);
}
