#include "sasa/solver.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sasa/oracle.hpp"

namespace sasa {

namespace {

// p x n view of an n x p coefficient matrix, so that the column-major
// storage is beta stacked by location.
MatrixXd to_columns(const MatrixXd& beta) { return beta.transpose(); }

MatrixXd stacked_to_rows(const VectorXd& b, Index n, Index p) {
  return Eigen::Map<const MatrixXd>(b.data(), p, n).transpose();
}

std::string condition_report(const Eigen::LLT<MatrixXd>& llt) {
  const double rc = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  return "estimated reciprocal condition number " + std::to_string(rc);
}

class UnionFind {
 public:
  explicit UnionFind(Index n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }
  Index find(Index x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& px = parent_[static_cast<std::size_t>(x)];
      px = parent_[static_cast<std::size_t>(px)];
      x = px;
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }

 private:
  std::vector<Index> parent_;
};

}  // namespace

DifferenceStructure::DifferenceStructure(Index n) : n_(n) {
  if (n < 2) throw InputError("difference structure needs at least two locations");
  pairs_.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) pairs_.emplace_back(i, j);
}

Index DifferenceStructure::pair_index(Index i, Index j) const {
  if (i > j) std::swap(i, j);
  if (i == j || i < 0 || j >= n_) throw InputError("pair_index: need distinct in-range locations");
  return i * n_ - i * (i + 1) / 2 + (j - i - 1);
}

MatrixXd DifferenceStructure::dense_D() const {
  MatrixXd D = MatrixXd::Zero(pair_count(), n_);
  for (Index r = 0; r < pair_count(); ++r) {
    D(r, pairs_[static_cast<std::size_t>(r)].first) = 1.0;
    D(r, pairs_[static_cast<std::size_t>(r)].second) = -1.0;
  }
  return D;
}

MatrixXd DifferenceStructure::apply_A(const MatrixXd& B) const {
  MatrixXd out(B.rows(), pair_count());
  for (Index r = 0; r < pair_count(); ++r) {
    const auto [i, j] = pairs_[static_cast<std::size_t>(r)];
    out.col(r) = B.col(i) - B.col(j);
  }
  return out;
}

MatrixXd DifferenceStructure::apply_At(const MatrixXd& U) const {
  const Index p = U.rows();
  MatrixXd out = MatrixXd::Zero(p, n_);
  for (Index r = 0; r < pair_count(); ++r) {
    const auto [i, j] = pairs_[static_cast<std::size_t>(r)];
    const double* u = U.data() + r * p;
    double* oi = out.data() + i * p;
    double* oj = out.data() + j * p;
    for (Index k = 0; k < p; ++k) {
      oi[k] += u[k];
      oj[k] -= u[k];
    }
  }
  return out;
}

MatrixXd DifferenceStructure::apply_AtA(const MatrixXd& B) const {
  const VectorXd total = B.rowwise().sum();
  return (static_cast<double>(n_) * B).colwise() - total;
}

DifferenceStructure build_difference_structure(Index n) { return DifferenceStructure(n); }

ProjectionOperator::ProjectionOperator(const Dataset& dataset) : omega_(dataset.m()) {
  const Index q = dataset.q();
  has_global_ = q > 0;
  Z_.resize(dataset.m(), q);
  Index row = 0;
  for (const auto& b : dataset.blocks()) {
    omega_.segment(row, b.size()).setConstant(1.0 / static_cast<double>(b.size()));
    if (has_global_) Z_.middleRows(row, b.size()) = b.Z;
    row += b.size();
  }
  if (has_global_) {
    ZtOZ_.compute(Z_.transpose() * omega_.asDiagonal() * Z_);
    if (ZtOZ_.info() != Eigen::Success || !(ZtOZ_.rcond() > 1e-13))
      throw NumericalError("global design rank-deficient (Z'Omega Z is singular)");
  }
}

VectorXd ProjectionOperator::apply(const VectorXd& v) const {
  VectorXd Ov = omega_.cwiseProduct(v);
  if (!has_global_) return Ov;
  const VectorXd coef = ZtOZ_.solve(Z_.transpose() * Ov);
  return Ov - omega_.cwiseProduct(Z_ * coef);
}

MatrixXd ProjectionOperator::dense() const {
  MatrixXd Q(size(), size());
  VectorXd e = VectorXd::Zero(size());
  for (Index k = 0; k < size(); ++k) {
    e(k) = 1.0;
    Q.col(k) = apply(e);
    e(k) = 0.0;
  }
  return Q;
}

ProjectionOperator projection_matrix(const Dataset& dataset) { return ProjectionOperator(dataset); }

AdmmProblem::AdmmProblem(const Dataset& dataset, const WeightMatrix& weights, SolverConfig config,
                         std::shared_ptr<const FusionPenalty> penalty)
    : dataset_(&dataset),
      config_(config),
      penalty_(penalty ? std::move(penalty) : make_scad(config.gamma)),
      diff_(dataset.n()) {
  config_.validate();
  penalty_->check(config_.vartheta);
  const Index n = dataset.n();
  const Index p = dataset.p();
  const Index q = dataset.q();
  if (weights.n() != n) throw InputError("weight matrix size does not match dataset");
  pair_weights_.reserve(static_cast<std::size_t>(diff_.pair_count()));
  for (const auto& [i, j] : diff_.pairs()) {
    const double c = weights(i, j);
    if (!(c > 0.0) || c > 1.0 + 1e-12 || !std::isfinite(c))
      throw InputError("pair weights must lie in (0, 1]");
    pair_weights_.push_back(c);
  }

  const Index np = n * p;
  XtQX_ = MatrixXd::Zero(np, np);
  XtQy_ = VectorXd::Zero(np);
  ZtOX_ = MatrixXd::Zero(q, np);
  ZtOy_ = VectorXd::Zero(q);
  MatrixXd ZtOZ = MatrixXd::Zero(q, q);
  for (Index i = 0; i < n; ++i) {
    const auto& b = dataset.block(i);
    const double w = 1.0 / static_cast<double>(b.size());
    XtQX_.block(i * p, i * p, p, p) = w * (b.X.transpose() * b.X);
    XtQy_.segment(i * p, p) = w * (b.X.transpose() * b.y);
    if (q > 0) {
      ZtOX_.middleCols(i * p, p) = w * (b.Z.transpose() * b.X);
      ZtOy_ += w * (b.Z.transpose() * b.y);
      ZtOZ += w * (b.Z.transpose() * b.Z);
    }
  }
  if (q > 0) {
    ZtOZ_.compute(ZtOZ);
    if (ZtOZ_.info() != Eigen::Success || !(ZtOZ_.rcond() > 1e-13))
      throw NumericalError("global design rank-deficient (Z'Omega Z is singular)");
    XtQX_ -= ZtOX_.transpose() * ZtOZ_.solve(ZtOX_);
    XtQy_ -= ZtOX_.transpose() * ZtOZ_.solve(ZtOy_);
  }

  MatrixXd system = XtQX_;
  const double theta = config_.vartheta;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index l = 0; l < p; ++l) system(i * p + l, j * p + l) -= theta;
  system.diagonal().array() += theta * static_cast<double>(n);
  system_.compute(system);
  if (system_.info() != Eigen::Success || !(system_.rcond() > 1e-14))
    throw NumericalError("beta-update system is singular: " + condition_report(system_));
}

VectorXd AdmmProblem::beta_rhs(const MatrixXd& delta, const MatrixXd& v) const {
  const MatrixXd AtU = diff_.apply_At(config_.vartheta * delta - v);
  return XtQy_ + Eigen::Map<const VectorXd>(AtU.data(), AtU.size());
}

MatrixXd AdmmProblem::update_beta(const AdmmState& state) const {
  const VectorXd b = system_.solve(beta_rhs(state.delta, state.v));
  return stacked_to_rows(b, dataset_->n(), dataset_->p());
}

VectorXd AdmmProblem::update_eta(const MatrixXd& beta) const {
  if (dataset_->q() == 0) return VectorXd(0);
  const MatrixXd B = to_columns(beta);
  const Eigen::Map<const VectorXd> b(B.data(), B.size());
  return ZtOZ_.solve(ZtOy_ - ZtOX_ * b);
}

MatrixXd AdmmProblem::update_delta(const MatrixXd& beta, const MatrixXd& v, double lambda) const {
  if (lambda < 0.0) throw InputError("lambda must be nonnegative");
  const MatrixXd sigma = diff_.apply_A(to_columns(beta)) + v / config_.vartheta;
  MatrixXd delta(sigma.rows(), sigma.cols());
  for (Index r = 0; r < sigma.cols(); ++r)
    penalty_->prox(sigma.col(r), lambda * pair_weights_[static_cast<std::size_t>(r)], config_.vartheta,
                   delta.col(r));
  return delta;
}

MatrixXd AdmmProblem::update_v(const MatrixXd& beta, const MatrixXd& delta, const MatrixXd& v) const {
  return v + config_.vartheta * (diff_.apply_A(to_columns(beta)) - delta);
}

double AdmmProblem::objective(const VectorXd& eta, const MatrixXd& beta, double lambda) const {
  double value = dataset_->weighted_loss(eta, beta);
  const MatrixXd diffs = diff_.apply_A(to_columns(beta));
  for (Index r = 0; r < diffs.cols(); ++r)
    value += penalty_->value(diffs.col(r).norm(), lambda * pair_weights_[static_cast<std::size_t>(r)]);
  return value;
}

AdmmState AdmmProblem::initialize(const InitMode& mode) const {
  const Dataset& data = *dataset_;
  const Index n = data.n();
  const Index p = data.p();
  AdmmState state;
  if (mode.kind == InitMode::Kind::per_location) {
    try {
      auto est = oracle_estimate(data, Partition::singletons(n));
      state.eta = std::move(est.eta);
      state.beta = std::move(est.beta);
    } catch (const NumericalError&) {
      throw NumericalError(
          "per-location initial fit is rank-deficient; use ridge_fusion initialization for locations with "
          "few replicates");
    }
  } else {
    if (mode.groups < 1 || mode.groups > n) throw InputError("ridge_fusion: K* must lie in 1..n");
    if (!(mode.ridge > 0.0)) throw InputError("ridge_fusion: ridge parameter must be positive");
    MatrixXd system = XtQX_;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        for (Index l = 0; l < p; ++l) system(i * p + l, j * p + l) -= mode.ridge;
    system.diagonal().array() += mode.ridge * static_cast<double>(n);
    Eigen::LLT<MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) throw NumericalError("ridge fusion system is singular");
    const MatrixXd ridge_beta = stacked_to_rows(llt.solve(XtQy_), n, p);

    // Rank locations along the leading principal direction of the ridge
    // estimates and cut the ranking into K* bins of near-equal size.
    const MatrixXd centered = ridge_beta.rowwise() - ridge_beta.colwise().mean();
    VectorXd direction = VectorXd::Unit(p, 0);
    if (centered.norm() > 0.0) {
      Eigen::JacobiSVD<MatrixXd> svd(centered, Eigen::ComputeThinV);
      direction = svd.matrixV().col(0);
    }
    const VectorXd score = centered * direction;
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return score(a) < score(b); });
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index r = 0; r < n; ++r)
      labels[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] =
          static_cast<int>(r * mode.groups / n);
    try {
      auto est = oracle_estimate(data, Partition(std::move(labels)));
      state.eta = std::move(est.eta);
      state.beta = std::move(est.beta);
    } catch (const NumericalError&) {
      // A bin can still be rank-deficient on its own; keep the ridge rows.
      state.beta = ridge_beta;
      state.eta = update_eta(ridge_beta);
    }
  }
  state.delta = diff_.apply_A(to_columns(state.beta));
  state.v = MatrixXd::Zero(p, diff_.pair_count());
  return state;
}

SasaFit AdmmProblem::fit(double lambda, const AdmmState* init) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be finite and nonnegative");
  const Index n = dataset_->n();
  const Index p = dataset_->p();
  AdmmState state = init != nullptr ? *init : initialize();
  if (state.beta.rows() != n || state.beta.cols() != p || state.delta.rows() != p ||
      state.delta.cols() != diff_.pair_count() || state.v.rows() != p || state.v.cols() != diff_.pair_count())
    throw InputError("initial ADMM state has inconsistent dimensions");
  state.iter = 0;
  state.primal_residual.clear();
  state.dual_residual.clear();

  const double theta = config_.vartheta;
  const Index pairs = diff_.pair_count();
  MatrixXd delta = state.delta;
  MatrixXd v = state.v;
  MatrixXd B(p, n);
  MatrixXd dual_acc(p, n);
  MatrixXd at_acc(p, n);
  VectorXd rhs = beta_rhs(delta, v);
  const double inv_theta = 1.0 / theta;
  std::vector<double> step(static_cast<std::size_t>(p)), prev(static_cast<std::size_t>(p));
  bool converged = false;

  for (int m = 1; m <= config_.max_iter; ++m) {
    // beta: solve the cached system.
    const VectorXd b = system_.solve(rhs);
    B = Eigen::Map<const MatrixXd>(b.data(), p, n);

    // delta and v in one sweep over pairs: prox of A beta + v / vartheta,
    // then dual ascent on the primal residual.
    double primal_sq = 0.0;
    dual_acc.setZero();
    at_acc.setZero();
    for (Index r = 0; r < pairs; ++r) {
      const auto [i, j] = diff_.pairs()[static_cast<std::size_t>(r)];
      const double* bi = B.data() + i * p;
      const double* bj = B.data() + j * p;
      double* d = delta.data() + r * p;
      double* u = v.data() + r * p;
      for (Index k = 0; k < p; ++k) {
        step[k] = bi[k] - bj[k] + u[k] * inv_theta;
        prev[k] = d[k];
      }
      penalty_->prox(step.data(), p, lambda * pair_weights_[static_cast<std::size_t>(r)], theta, d);
      double* gi = dual_acc.data() + i * p;
      double* gj = dual_acc.data() + j * p;
      double* ai = at_acc.data() + i * p;
      double* aj = at_acc.data() + j * p;
      for (Index k = 0; k < p; ++k) {
        const double res = bi[k] - bj[k] - d[k];
        u[k] += theta * res;
        primal_sq += res * res;
        gi[k] += d[k] - prev[k];
        gj[k] -= d[k] - prev[k];
        // A' (vartheta delta - v) for the next beta step
        const double w = theta * d[k] - u[k];
        ai[k] += w;
        aj[k] -= w;
      }
    }
    rhs = XtQy_ + Eigen::Map<const VectorXd>(at_acc.data(), at_acc.size());

    const double primal = std::sqrt(primal_sq);
    const double dual = theta * dual_acc.norm();
    state.primal_residual.push_back(primal);
    state.dual_residual.push_back(dual);
    state.iter = m;
    if (!std::isfinite(primal) || !B.allFinite())
      throw NumericalError("divergence: non-finite iterate at ADMM iteration " + std::to_string(m));
    if (primal < config_.tol) {
      converged = true;
      break;
    }
  }

  state.beta = B.transpose();
  state.eta = update_eta(state.beta);
  state.delta = std::move(delta);
  state.v = std::move(v);

  SasaFit result;
  auto [partition, alpha] = extract_groups(state, config_);
  result.partition = std::move(partition);
  result.alpha = std::move(alpha);
  result.converged = converged;
  result.lambda = lambda;
  result.objective = objective(state.eta, state.beta, lambda);
  result.state = std::move(state);
  return result;
}

MatrixXd update_beta(const AdmmState& state, const Dataset& dataset, const DifferenceStructure& diff,
                     const SolverConfig& config) {
  if (diff.n() != dataset.n()) throw InputError("difference structure does not match dataset");
  const AdmmProblem problem(dataset, equal_weights(dataset.n()), config);
  return problem.update_beta(state);
}

VectorXd update_eta(const AdmmState& state, const Dataset& dataset) {
  if (dataset.q() < 1) throw InputError("update_eta requires global covariates (q >= 1)");
  const AdmmProblem problem(dataset, equal_weights(dataset.n()), SolverConfig{});
  return problem.update_eta(state.beta);
}

MatrixXd update_delta(const AdmmState& state, const WeightMatrix& weights, const FusionPenalty& penalty,
                      double lambda, const SolverConfig& config) {
  config.validate();
  penalty.check(config.vartheta);
  if (lambda < 0.0) throw InputError("lambda must be nonnegative");
  const DifferenceStructure diff(state.beta.rows());
  const MatrixXd sigma = diff.apply_A(to_columns(state.beta)) + state.v / config.vartheta;
  MatrixXd delta(sigma.rows(), sigma.cols());
  for (Index r = 0; r < diff.pair_count(); ++r) {
    const auto [i, j] = diff.pairs()[static_cast<std::size_t>(r)];
    penalty.prox(sigma.col(r), lambda * weights(i, j), config.vartheta, delta.col(r));
  }
  return delta;
}

MatrixXd update_v(const AdmmState& state, const DifferenceStructure& diff, const SolverConfig& config) {
  return state.v + config.vartheta * (diff.apply_A(to_columns(state.beta)) - state.delta);
}

SasaFit fit(const Dataset& dataset, const WeightMatrix& weights, double lambda, const SolverConfig& config,
            const AdmmState* init) {
  const AdmmProblem problem(dataset, weights, config);
  return problem.fit(lambda, init);
}

AdmmState initialize(const Dataset& dataset, const InitMode& mode) {
  const AdmmProblem problem(dataset, equal_weights(dataset.n()), SolverConfig{});
  return problem.initialize(mode);
}

std::pair<Partition, MatrixXd> extract_groups(const AdmmState& state, const SolverConfig& config) {
  const Index n = state.beta.rows();
  if (n == 1) return {Partition::single_group(1), state.beta};
  const DifferenceStructure diff(n);
  if (state.delta.cols() != diff.pair_count()) throw InputError("delta does not match beta's location count");
  UnionFind uf(n);
  for (Index r = 0; r < diff.pair_count(); ++r)
    if (state.delta.col(r).norm() <= config.group_tol)
      uf.unite(diff.pairs()[static_cast<std::size_t>(r)].first, diff.pairs()[static_cast<std::size_t>(r)].second);
  std::vector<int> roots(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) roots[static_cast<std::size_t>(i)] = static_cast<int>(uf.find(i));
  Partition partition(std::move(roots));
  MatrixXd alpha = MatrixXd::Zero(partition.K(), state.beta.cols());
  const auto sizes = partition.sizes();
  for (Index i = 0; i < n; ++i) alpha.row(partition.label(i)) += state.beta.row(i);
  for (int k = 0; k < partition.K(); ++k) alpha.row(k) /= static_cast<double>(sizes[static_cast<std::size_t>(k)]);
  return {std::move(partition), std::move(alpha)};
}

Coefficients refit(const Dataset& dataset, const Partition& partition) {
  auto est = oracle_estimate(dataset, partition);
  return Coefficients{std::move(est.eta), std::move(est.beta), std::move(est.alpha)};
}

}  // namespace sasa
