#ifndef SASA_TEST_PROPERTIES_HPP
#define SASA_TEST_PROPERTIES_HPP

// Randomized invariant checks shared by the property unit test and the
// acceptance binary. Each returns the number of violated cases.

#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sasa/graph.hpp"
#include "sasa/penalty.hpp"
#include "sasa/solver.hpp"
#include "sasa/tuning.hpp"
#include "sasa/weights.hpp"

namespace sasa::props {

struct Outcome {
  std::string name;
  int cases = 0;
  int failures = 0;
};

// Concave and nondecreasing on [0, inf), constant from gamma * lambda on.
inline Outcome penalty_shape(std::uint64_t seed) {
  Outcome o{"penalty concavity/plateau"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lam(0.01, 3.0), gam(2.05, 6.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double lambda = lam(rng), gamma = gam(rng);
    const double hi = 1.5 * gamma * lambda;
    const int steps = 400;
    const double h = hi / steps;
    for (int k = 1; k < steps; ++k) {
      ++o.cases;
      const double a = scad_value((k - 1) * h, lambda, gamma);
      const double b = scad_value(k * h, lambda, gamma);
      const double c = scad_value((k + 1) * h, lambda, gamma);
      const double scale = 1e-12 * std::max(1.0, lambda * lambda * gamma);
      if (a - 2 * b + c > scale || b < a - scale) ++o.failures;
    }
    const double plateau = 0.5 * lambda * lambda * (gamma + 1.0);
    for (double t : {gamma * lambda, gamma * lambda * 1.01, 2.0 * gamma * lambda, 1e3 * gamma * lambda}) {
      ++o.cases;
      if (std::abs(scad_value(t, lambda, gamma) - plateau) > 1e-12 * std::max(1.0, plateau)) ++o.failures;
    }
  }
  return o;
}

// Weights never increase with neighbor order (sp, reg_sp) or with the
// initial-estimate distance (reg, reg_sp), and lie in (0, 1].
inline Outcome weight_monotonicity(std::uint64_t seed) {
  Outcome o{"weight monotonicity"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int rows = 2 + static_cast<int>(rng() % 5), cols = 2 + static_cast<int>(rng() % 5);
    const auto orders = neighbor_orders(build_grid_adjacency(rows, cols));
    const int n = rows * cols;
    Eigen::MatrixXd b(n, 2);
    for (Eigen::Index k = 0; k < b.size(); ++k) b.data()[k] = u(rng);
    for (double psi : kDefaultPsiGrid) {
      const auto sp = compute_weights({WeightKind::sp, psi}, &orders, nullptr);
      const auto reg = compute_weights({WeightKind::reg, psi}, &orders, &b);
      const auto rs = compute_weights({WeightKind::reg_sp, psi}, &orders, &b);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            if (i == j || i == k) continue;
            ++o.cases;
            bool ok = true;
            if (orders.a(i, j) <= orders.a(i, k) && sp(i, j) < sp(i, k)) ok = false;
            const double dj = (b.row(i) - b.row(j)).norm(), dk = (b.row(i) - b.row(k)).norm();
            if (dj <= dk && reg(i, j) < reg(i, k)) ok = false;
            if (orders.a(i, j) <= orders.a(i, k) && dj <= dk && rs(i, j) < rs(i, k)) ok = false;
            for (double w : {sp(i, j), reg(i, j), rs(i, j)})
              if (!(w > 0.0 && w <= 1.0)) ok = false;
            if (!ok) ++o.failures;
          }
    }
  }
  return o;
}

// extract_groups equals connected components of the fused-pair graph,
// computed here by repeated relabeling to a fixed point.
inline Outcome extract_groups_equivalence(std::uint64_t seed) {
  Outcome o{"extract_groups partition equivalence"};
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution fused(0.08);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = 2 + static_cast<Index>(rng() % 15);
    const DifferenceStructure diff(n);
    AdmmState s;
    s.beta = MatrixXd::Zero(n, 2);
    for (Index k = 0; k < s.beta.size(); ++k) s.beta.data()[k] = g(rng);
    s.delta = MatrixXd::Zero(2, diff.pair_count());
    std::vector<int> label(static_cast<std::size_t>(n));
    std::iota(label.begin(), label.end(), 0);
    for (Index r = 0; r < diff.pair_count(); ++r) {
      if (!fused(rng)) s.delta.col(r) << 1.0 + std::abs(g(rng)), g(rng);
    }
    for (bool changed = true; changed;) {
      changed = false;
      for (Index r = 0; r < diff.pair_count(); ++r) {
        if (s.delta.col(r).norm() > SolverConfig{}.group_tol) continue;
        auto [i, j] = diff.pairs()[static_cast<std::size_t>(r)];
        auto& li = label[static_cast<std::size_t>(i)];
        auto& lj = label[static_cast<std::size_t>(j)];
        if (li != lj) {
          li = lj = std::min(li, lj);
          changed = true;
        }
      }
    }
    const auto [part, alpha] = extract_groups(s, SolverConfig{});
    ++o.cases;
    bool ok = part == Partition(label);
    for (int k = 0; ok && k < part.K(); ++k) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(2);
      const auto members = part.members()[static_cast<std::size_t>(k)];
      for (Index i : members) mean += s.beta.row(i);
      mean /= static_cast<double>(members.size());
      if ((mean - alpha.row(k)).norm() > 1e-12) ok = false;
    }
    if (!ok) ++o.failures;
  }
  return o;
}

// Relabeling locations permutes the fit and nothing else.
inline Outcome fit_permutation_equivariance(std::uint64_t seed) {
  Outcome o{"fit permutation equivariance"};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  SolverConfig cfg;
  cfg.tol = 1e-10;
  cfg.max_iter = 100000;
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 6 + trial;
    std::vector<LocationBlock> blocks;
    for (int i = 0; i < n; ++i) {
      const int ni = 4 + static_cast<int>(rng() % 4);
      LocationBlock b{std::to_string(i), VectorXd(ni), MatrixXd(ni, 2), MatrixXd(ni, 2)};
      const double level = (i % 3) * 1.5;
      for (int h = 0; h < ni; ++h) {
        b.Z(h, 0) = 1.0;
        b.Z(h, 1) = g(rng);
        b.X(h, 0) = g(rng);
        b.X(h, 1) = g(rng);
        b.y(h) = 1.0 + 0.5 * b.Z(h, 1) + level * (b.X(h, 0) + b.X(h, 1)) + 0.2 * g(rng);
      }
      blocks.push_back(std::move(b));
    }
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<LocationBlock> shuffled;
    for (int k : perm) shuffled.push_back(blocks[static_cast<std::size_t>(k)]);
    const Dataset d(blocks), ds(shuffled);
    MatrixXd c = MatrixXd::Ones(n, n), cs(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) c(i, j) = c(j, i) = std::exp(-0.1 * std::abs(i - j));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) cs(i, j) = c(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    for (double lambda : {0.05, 0.3, 1.0}) {
      ++o.cases;
      const auto a = fit(d, WeightMatrix{c}, lambda, cfg);
      const auto b = fit(ds, WeightMatrix{cs}, lambda, cfg);
      std::vector<int> mapped;
      for (int k : perm) mapped.push_back(a.partition.label(k));
      double gap = (a.state.eta - b.state.eta).norm();
      for (int i = 0; i < n; ++i)
        gap = std::max(gap, (a.state.beta.row(perm[static_cast<std::size_t>(i)]) - b.state.beta.row(i)).norm());
      if (!(Partition(mapped) == b.partition) || gap > 1e-6) ++o.failures;
    }
  }
  return o;
}

// With the residual mean square fixed, BIC strictly increases in K.
inline Outcome bic_monotone_in_k(std::uint64_t seed) {
  Outcome o{"BIC monotonicity in K"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rms(1e-3, 10.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Index n = 3 + static_cast<Index>(rng() % 200);
    const Index p = 1 + static_cast<Index>(rng() % 4);
    const Index q = static_cast<Index>(rng() % 6);
    const double r = rms(rng);
    for (int K = 1; K < n; ++K) {
      ++o.cases;
      if (!(bic_value(r, K + 1, n, p, q) > bic_value(r, K, n, p, q))) ++o.failures;
    }
  }
  return o;
}

inline std::vector<Outcome> all(std::uint64_t seed) {
  return {penalty_shape(seed), weight_monotonicity(seed + 1), extract_groups_equivalence(seed + 2),
          fit_permutation_equivariance(seed + 3), bic_monotone_in_k(seed + 4)};
}

}  // namespace sasa::props

#endif  // SASA_TEST_PROPERTIES_HPP
