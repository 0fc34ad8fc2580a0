#ifndef SASA_TEST_HELPERS_HPP
#define SASA_TEST_HELPERS_HPP

#include <random>
#include <vector>

#include "sasa/model.hpp"

namespace sasa::test {

// Random dataset with n locations, q global and p local covariates and
// replicate counts drawn from [ni_lo, ni_hi]. Responses come from the
// given beta rows (or zero when beta is empty) plus noise.
inline Dataset random_dataset(int n, int q, int p, int ni_lo, int ni_hi, std::uint64_t seed,
                              const MatrixXd& beta = MatrixXd(), double noise = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> reps(ni_lo, ni_hi);
  VectorXd eta(q);
  for (int k = 0; k < q; ++k) eta(k) = 1.0 + 0.5 * k;
  std::vector<LocationBlock> blocks;
  for (int i = 0; i < n; ++i) {
    const int ni = reps(rng);
    LocationBlock b{std::to_string(i + 1), VectorXd(ni), MatrixXd(ni, q), MatrixXd(ni, p)};
    for (int h = 0; h < ni; ++h) {
      for (int k = 0; k < q; ++k) b.Z(h, k) = k == 0 ? 1.0 : normal(rng);
      for (int k = 0; k < p; ++k) b.X(h, k) = normal(rng);
      double mean = q > 0 ? b.Z.row(h).dot(eta) : 0.0;
      if (beta.size() > 0) mean += b.X.row(h).dot(beta.row(i));
      b.y(h) = mean + noise * normal(rng);
    }
    blocks.push_back(std::move(b));
  }
  return Dataset(std::move(blocks));
}

// beta rows taken from group levels by label.
inline MatrixXd grouped_beta(const std::vector<int>& labels, const MatrixXd& levels) {
  MatrixXd beta(static_cast<Index>(labels.size()), levels.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) beta.row(static_cast<Index>(i)) = levels.row(labels[i]);
  return beta;
}

}  // namespace sasa::test

#endif  // SASA_TEST_HELPERS_HPP
