#include "sasa/weights.hpp"

#include <cmath>

#include "sasa/error.hpp"

namespace sasa {

WeightKind parse_weight_kind(const std::string& name) {
  if (name == "equal") return WeightKind::equal;
  if (name == "reg_sp" || name == "reg-sp") return WeightKind::reg_sp;
  if (name == "reg") return WeightKind::reg;
  if (name == "sp") return WeightKind::sp;
  throw InputError("unknown weight scheme '" + name + "' (expected equal|reg_sp|reg|sp)");
}

std::string to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::equal: return "equal";
    case WeightKind::reg_sp: return "reg_sp";
    case WeightKind::reg: return "reg";
    case WeightKind::sp: return "sp";
  }
  return "?";
}

WeightMatrix equal_weights(Eigen::Index n) { return WeightMatrix{Eigen::MatrixXd::Ones(n, n)}; }

WeightMatrix compute_weights(const WeightSpec& spec, const NeighborOrders* orders, const Eigen::MatrixXd* beta_init) {
  const std::string scheme = to_string(spec.kind);
  if (!(spec.psi >= 0.0) || !std::isfinite(spec.psi)) throw InputError("psi must be a finite nonnegative value");
  if (spec.requires_orders() && orders == nullptr)
    throw InputError("weight scheme '" + scheme + "' requires neighbor orders");
  if (spec.requires_init() && beta_init == nullptr)
    throw InputError("weight scheme '" + scheme + "' requires initial coefficient estimates");
  if (spec.requires_init() && !beta_init->allFinite())
    throw InputError("weight scheme '" + scheme + "': initial estimates contain non-finite values");

  const Eigen::Index n = orders != nullptr ? orders->a.rows() : (beta_init != nullptr ? beta_init->rows() : 0);
  if (orders != nullptr && beta_init != nullptr && spec.requires_init() && beta_init->rows() != n)
    throw InputError("neighbor orders and initial estimates disagree on n");
  if (spec.kind == WeightKind::equal) {
    if (n == 0) throw InputError("equal weights need n from neighbor orders or initial estimates");
    return equal_weights(n);
  }

  WeightMatrix w{Eigen::MatrixXd::Ones(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double exponent = 0.0;
      switch (spec.kind) {
        case WeightKind::reg_sp:
          exponent = spec.psi * (1.0 - orders->a(i, j)) * (beta_init->row(i) - beta_init->row(j)).norm();
          break;
        case WeightKind::reg:
          exponent = -spec.psi * (beta_init->row(i) - beta_init->row(j)).norm();
          break;
        case WeightKind::sp:
          exponent = spec.psi * (1.0 - orders->a(i, j));
          break;
        case WeightKind::equal:
          break;
      }
      w.c(i, j) = w.c(j, i) = std::exp(exponent);
    }
  }
  return w;
}

}  // namespace sasa
