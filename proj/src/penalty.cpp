#include "sasa/penalty.hpp"

#include <cmath>

#include "sasa/error.hpp"

namespace sasa {

double scad_value(double t, double lambda, double gamma) {
  if (t < 0.0) throw InputError("scad_value: magnitude must be nonnegative");
  if (lambda < 0.0) throw InputError("scad_value: lambda must be nonnegative");
  if (!(gamma > 2.0)) throw InputError("scad_value: gamma must exceed 2");
  if (lambda == 0.0) return 0.0;
  if (t <= lambda) return lambda * t;
  if (t <= gamma * lambda) return (2.0 * gamma * lambda * t - t * t - lambda * lambda) / (2.0 * (gamma - 1.0));
  return 0.5 * lambda * lambda * (gamma + 1.0);
}

double scaled_penalty(double t, double lambda, double gamma) {
  if (!(lambda > 0.0)) throw InputError("scaled_penalty: lambda must be positive");
  return scad_value(t, lambda, gamma) / lambda;
}

Eigen::VectorXd group_soft_threshold(const Eigen::Ref<const Eigen::VectorXd>& w, double t) {
  if (t < 0.0) throw InputError("group_soft_threshold: threshold must be nonnegative");
  const double norm = w.norm();
  if (norm <= t) return Eigen::VectorXd::Zero(w.size());
  return (1.0 - t / norm) * w;
}

namespace {

// Branch boundaries use <= exactly as in the closed form; the branches
// agree at the boundaries so ties only fix which expression runs.
void scad_prox_into(const double* sigma, Eigen::Index dim, double lambda_eff, double gamma, double vartheta,
                    double* out) {
  double sq = 0.0;
  for (Eigen::Index k = 0; k < dim; ++k) sq += sigma[k] * sigma[k];
  if (sq > gamma * gamma * lambda_eff * lambda_eff) {
    if (out != sigma)
      for (Eigen::Index k = 0; k < dim; ++k) out[k] = sigma[k];
    return;
  }
  const double norm = std::sqrt(sq);
  double scale;
  if (norm <= lambda_eff + lambda_eff / vartheta) {
    const double t = lambda_eff / vartheta;
    scale = norm <= t ? 0.0 : 1.0 - t / norm;
  } else {
    const double c = (gamma - 1.0) * vartheta;
    const double t = gamma * lambda_eff / c;
    scale = norm <= t ? 0.0 : (1.0 - t / norm) / (1.0 - 1.0 / c);
  }
  for (Eigen::Index k = 0; k < dim; ++k) out[k] = scale * sigma[k];
}

}  // namespace

Eigen::VectorXd scad_prox(const Eigen::Ref<const Eigen::VectorXd>& sigma, double lambda_eff, double gamma,
                          double vartheta) {
  if (lambda_eff < 0.0) throw InputError("scad_prox: lambda must be nonnegative");
  if (!(vartheta > 0.0)) throw InputError("scad_prox: vartheta must be positive");
  if (!(gamma > 1.0 + 1.0 / vartheta)) throw InputError("scad_prox: requires gamma > 1 + 1/vartheta");
  const Eigen::VectorXd in = sigma;
  Eigen::VectorXd out(sigma.size());
  scad_prox_into(in.data(), in.size(), lambda_eff, gamma, vartheta, out.data());
  return out;
}

ScadPenalty::ScadPenalty(double gamma) : gamma_(gamma) {
  if (!(gamma > 2.0)) throw InputError("SCAD gamma must exceed 2");
}

void ScadPenalty::prox(const double* sigma, Eigen::Index dim, double lambda, double vartheta, double* out) const {
  scad_prox_into(sigma, dim, lambda, gamma_, vartheta, out);
}

void ScadPenalty::check(double vartheta) const {
  if (!(vartheta > 0.0)) throw InputError("vartheta must be positive");
  if (!(gamma_ > 1.0 + 1.0 / vartheta))
    throw InputError("SCAD closed-form update requires gamma > 1 + 1/vartheta");
}

std::shared_ptr<const FusionPenalty> make_scad(double gamma) { return std::make_shared<ScadPenalty>(gamma); }

}  // namespace sasa
