#ifndef SASA_WEIGHTS_HPP
#define SASA_WEIGHTS_HPP

#include <Eigen/Core>

#include <string>
#include <vector>

#include "sasa/graph.hpp"

namespace sasa {

enum class WeightKind { equal, reg_sp, reg, sp };

WeightKind parse_weight_kind(const std::string& name);
std::string to_string(WeightKind kind);

struct WeightSpec {
  WeightKind kind = WeightKind::equal;
  double psi = 1.0;

  bool requires_orders() const { return kind == WeightKind::reg_sp || kind == WeightKind::sp; }
  bool requires_init() const { return kind == WeightKind::reg_sp || kind == WeightKind::reg; }
};

// Candidate scale values used when tuning psi.
inline const std::vector<double> kDefaultPsiGrid{0.1, 0.5, 1.0, 3.0};

// Symmetric pairwise weights c_ij in (0, 1]; the diagonal is set to 1 and
// never read.
struct WeightMatrix {
  Eigen::MatrixXd c;

  Eigen::Index n() const { return c.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return c(i, j); }
};

WeightMatrix equal_weights(Eigen::Index n);

// orders and beta_init may be null when the scheme does not need them.
//   equal   1
//   reg_sp  exp(psi (1 - a_ij) ||b_i - b_j||)
//   reg     exp(-psi ||b_i - b_j||)
//   sp      exp(psi (1 - a_ij))
WeightMatrix compute_weights(const WeightSpec& spec, const NeighborOrders* orders, const Eigen::MatrixXd* beta_init);

}  // namespace sasa

#endif  // SASA_WEIGHTS_HPP
