#ifndef SASA_PENALTY_HPP
#define SASA_PENALTY_HPP

#include <Eigen/Core>

#include <memory>
#include <string>

namespace sasa {

// SCAD p_gamma(t, lambda) for t >= 0: linear up to lambda, quadratic
// blend up to gamma*lambda, constant lambda^2 (gamma+1)/2 beyond.
double scad_value(double t, double lambda, double gamma);

// lambda^-1 p_gamma(t, lambda); requires lambda > 0.
double scaled_penalty(double t, double lambda, double gamma);

// (1 - t/||w||)_+ w
Eigen::VectorXd group_soft_threshold(const Eigen::Ref<const Eigen::VectorXd>& w, double t);

// argmin_d vartheta/2 ||sigma - d||^2 + p_gamma(||d||, lambda_eff).
// Requires gamma > 1 + 1/vartheta so the middle branch is well defined.
Eigen::VectorXd scad_prox(const Eigen::Ref<const Eigen::VectorXd>& sigma, double lambda_eff, double gamma,
                          double vartheta);

// Norm penalty on pairwise differences: value and proximal map.
class FusionPenalty {
 public:
  virtual ~FusionPenalty() = default;

  virtual std::string name() const = 0;
  virtual double value(double t, double lambda) const = 0;
  // out = argmin_d vartheta/2 ||sigma - d||^2 + value(||d||, lambda).
  // sigma and out hold dim contiguous values and may alias.
  virtual void prox(const double* sigma, Eigen::Index dim, double lambda, double vartheta, double* out) const = 0;
  void prox(const Eigen::Ref<const Eigen::VectorXd>& sigma, double lambda, double vartheta,
            Eigen::Ref<Eigen::VectorXd> out) const {
    Eigen::VectorXd tmp(sigma.size());
    prox(sigma.data(), sigma.size(), lambda, vartheta, tmp.data());
    out = tmp;
  }
  // Throws if the closed-form prox is invalid for this vartheta.
  virtual void check(double vartheta) const = 0;
};

class ScadPenalty final : public FusionPenalty {
 public:
  explicit ScadPenalty(double gamma);

  double gamma() const { return gamma_; }
  std::string name() const override { return "scad"; }
  double value(double t, double lambda) const override { return scad_value(t, lambda, gamma_); }
  using FusionPenalty::prox;
  void prox(const double* sigma, Eigen::Index dim, double lambda, double vartheta, double* out) const override;
  void check(double vartheta) const override;

 private:
  double gamma_;
};

std::shared_ptr<const FusionPenalty> make_scad(double gamma);

}  // namespace sasa

#endif  // SASA_PENALTY_HPP
