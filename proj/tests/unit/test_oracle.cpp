#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "sasa/oracle.hpp"

using namespace sasa;

namespace {

// U = (Z, X W) stacked, with Omega.
struct DenseU {
  MatrixXd U;
  VectorXd y, omega;
};

DenseU dense_u(const Dataset& d, const Partition& part) {
  const Index q = d.q(), p = d.p(), K = part.K();
  DenseU out;
  out.U = MatrixXd::Zero(d.m(), q + K * p);
  out.y.resize(d.m());
  out.omega.resize(d.m());
  Index row = 0;
  for (Index i = 0; i < d.n(); ++i) {
    const auto& b = d.block(i);
    out.U.block(row, 0, b.size(), q) = b.Z;
    out.U.block(row, q + part.label(i) * p, b.size(), p) = b.X;
    out.y.segment(row, b.size()) = b.y;
    out.omega.segment(row, b.size()).setConstant(1.0 / b.size());
    row += b.size();
  }
  return out;
}

}  // namespace

TEST_CASE("oracle estimate equals dense weighted least squares") {
  const auto d = test::random_dataset(8, 2, 2, 2, 6, 31);
  const Partition part({0, 0, 1, 1, 2, 2, 0, 1});
  const auto o = oracle_estimate(d, part);
  const auto du = dense_u(d, part);
  const MatrixXd O = du.omega.asDiagonal();
  const VectorXd theta = (du.U.transpose() * O * du.U).ldlt().solve(du.U.transpose() * O * du.y);
  CHECK((o.eta - theta.head(2)).norm() < 1e-10);
  for (int k = 0; k < 3; ++k) CHECK((o.alpha.row(k).transpose() - theta.segment(2 + 2 * k, 2)).norm() < 1e-10);
  CHECK(o.beta.row(6) == o.alpha.row(0));
}

TEST_CASE("partition design blocks") {
  const auto d = test::random_dataset(5, 1, 2, 3, 4, 32);
  const Partition part({0, 1, 0, 1, 1});
  const auto pd = partition_design(d, part);
  const auto du = dense_u(d, part);
  const MatrixXd O = du.omega.asDiagonal();
  CHECK((pd.UtOU - du.U.transpose() * O * du.U).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((pd.UtOy - du.U.transpose() * O * du.y).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((pd.UtOOU - du.U.transpose() * O * O * du.U).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("variance estimate arithmetic") {
  std::vector<LocationBlock> blocks{
      {"a", VectorXd(3), MatrixXd::Ones(3, 1), MatrixXd(3, 1)},
      {"b", VectorXd(3), MatrixXd::Ones(3, 1), MatrixXd(3, 1)},
  };
  blocks[0].y << 1, 2, 4;
  blocks[0].X << 0, 0, 0;
  blocks[1].y << 0, 0, 1;
  blocks[1].X << 1, 1, 1;
  const Dataset d(blocks);
  VectorXd eta(1);
  eta << 2.0;
  MatrixXd beta(2, 1);
  beta << 0.0, -1.0;
  // residuals (-1, 0, 2) and (-1, -1, 0): RSS = 7, df = 6 - 1 - 2
  CHECK(sigma2_hat(d, eta, beta, 2) == doctest::Approx(7.0 / 3.0));
  CHECK_THROWS_AS(sigma2_hat(d, eta, beta, 5), InputError);
}

TEST_CASE("sandwich standard errors match the dense formula") {
  const auto d = test::random_dataset(6, 2, 2, 2, 7, 33);
  const Partition part({0, 0, 1, 1, 1, 0});
  const auto du = dense_u(d, part);
  const MatrixXd O = du.omega.asDiagonal();
  const MatrixXd Hinv = (du.U.transpose() * O * du.U).inverse();
  const MatrixXd V = Hinv * du.U.transpose() * O * O * du.U * Hinv;
  const double s2 = 0.37;
  const VectorXd expected = (s2 * V.diagonal()).cwiseSqrt();
  CHECK((coef_se(d, part, s2) - expected).norm() < 1e-10);
  // homogeneous in sigma
  CHECK((coef_se(d, part, 4.0 * s2) - 2.0 * expected).norm() < 1e-10);

  const auto fit = oracle_fit(d, part);
  CHECK(fit.se.size() == 2 + 2 * 2);
  CHECK((fit.se - coef_se(d, part, fit.sigma2)).norm() < 1e-12);
  CHECK(fit.sigma2 == doctest::Approx(sigma2_hat(d, fit.eta, fit.beta, 2)));
}

TEST_CASE("single replicates reduce to ordinary least squares errors") {
  const auto d = test::random_dataset(12, 1, 1, 1, 1, 34);
  const Partition part({0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2});
  const auto du = dense_u(d, part);
  const MatrixXd inv = (du.U.transpose() * du.U).inverse();
  const double s2 = 1.3;
  CHECK((coef_se(d, part, s2) - (s2 * inv.diagonal()).cwiseSqrt()).norm() < 1e-10);
}

TEST_CASE("minimum group gap") {
  MatrixXd a(3, 2);
  a << 1, 1, 1.5, 1.5, 2, 2;
  CHECK(min_group_gap(a) == doctest::Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(min_group_gap(a.topRows(1)), InputError);
}

TEST_CASE("rank-deficient partition design") {
  auto blocks = test::random_dataset(2, 1, 2, 3, 3, 35).blocks();
  blocks[0].X.col(1) = blocks[0].X.col(0);
  blocks[1].X.col(1) = 2.0 * blocks[1].X.col(0);
  const Dataset d(blocks);
  CHECK_THROWS_AS(oracle_estimate(d, Partition({0, 1})), NumericalError);
}
