#include <gtest/gtest.h>

#include <random>

#include "tdpwm/qp.hpp"

using namespace tdpwm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const MatrixXd kNone(0, 2);
const VectorXd kNoneB(0);

}  // namespace

TEST(Qp, Unconstrained) {
  MatrixXd H(2, 2);
  H << 4, 1, 1, 3;
  VectorXd g(2);
  g << 1, 2;
  const QpResult r = solve_qp(H, g, kNone, kNoneB, kNone, kNoneB);
  ASSERT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_LT((H * r.x + g).norm(), 1e-14);
}

TEST(Qp, EqualityWithMultiplier) {
  const MatrixXd H = MatrixXd::Identity(2, 2);
  const VectorXd g = VectorXd::Zero(2);
  MatrixXd A(1, 2);
  A << 1, 1;
  VectorXd b(1);
  b << -1;  // x1 + x2 - 1 = 0
  const QpResult r = solve_qp(H, g, A, b, kNone, kNoneB);
  ASSERT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_NEAR(r.x(0), 0.5, 1e-14);
  EXPECT_NEAR(r.x(1), 0.5, 1e-14);
  EXPECT_NEAR(r.lambda_eq(0), 0.5, 1e-14);
}

TEST(Qp, ActiveAndInactiveInequalities) {
  const MatrixXd H = MatrixXd::Identity(1, 1);
  VectorXd g(1);
  g << -2;  // min (x - 2)^2 / 2
  MatrixXd A(2, 1);
  A << -1, 1;
  VectorXd b(2);
  b << 1, 5;  // x <= 1, x >= -5
  const QpResult r = solve_qp(H, g, MatrixXd(0, 1), kNoneB, A, b);
  ASSERT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_NEAR(r.x(0), 1.0, 1e-14);
  EXPECT_NEAR(r.mu_in(0), 1.0, 1e-14);
  EXPECT_EQ(r.mu_in(1), 0.0);
}

TEST(Qp, Infeasible) {
  const MatrixXd H = MatrixXd::Identity(1, 1);
  const VectorXd g = VectorXd::Zero(1);
  MatrixXd A(2, 1);
  A << 1, -1;
  VectorXd b(2);
  b << -1, 0;  // x >= 1 and x <= 0
  EXPECT_EQ(solve_qp(H, g, MatrixXd(0, 1), kNoneB, A, b).status, QpStatus::kInfeasible);
}

TEST(Qp, InconsistentEqualities) {
  const MatrixXd H = MatrixXd::Identity(2, 2);
  MatrixXd A(2, 2);
  A << 1, 1, 2, 2;
  VectorXd b(2);
  b << -1, -3;
  EXPECT_EQ(solve_qp(H, VectorXd::Zero(2), A, b, kNone, kNoneB).status,
            QpStatus::kInfeasible);
}

TEST(Qp, RandomProblemsSatisfyKkt) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + trial % 12, me = trial % 3, mi = 2 * n;
    MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = nd(rng);
    const MatrixXd H = M * M.transpose() + 0.1 * MatrixXd::Identity(n, n);
    VectorXd g(n), x0(n);
    for (int i = 0; i < n; ++i) { g(i) = 10 * nd(rng); x0(i) = nd(rng); }
    MatrixXd Ae(me, n), Ai(mi, n);
    for (int i = 0; i < me; ++i)
      for (int j = 0; j < n; ++j) Ae(i, j) = nd(rng);
    for (int i = 0; i < mi; ++i)
      for (int j = 0; j < n; ++j) Ai(i, j) = nd(rng);
    // x0 is feasible by construction.
    const VectorXd be = -Ae * x0;
    VectorXd bi = -Ai * x0;
    for (int i = 0; i < mi; ++i) bi(i) += std::abs(nd(rng));
    const QpResult r = solve_qp(H, g, Ae, be, Ai, bi);
    ASSERT_EQ(r.status, QpStatus::kOptimal) << trial;
    const VectorXd grad = H * r.x + g - Ae.transpose() * r.lambda_eq - Ai.transpose() * r.mu_in;
    const double scale = 1.0 + g.lpNorm<Eigen::Infinity>();
    EXPECT_LT(grad.lpNorm<Eigen::Infinity>(), 1e-9 * scale) << trial;
    if (me) {
      EXPECT_LT((Ae * r.x + be).lpNorm<Eigen::Infinity>(), 1e-9 * scale);
    }
    const VectorXd s = Ai * r.x + bi;
    EXPECT_GT(s.minCoeff(), -1e-9 * scale);
    EXPECT_GE(r.mu_in.minCoeff(), 0.0);
    EXPECT_LT((s.array() * r.mu_in.array()).abs().maxCoeff(), 1e-8 * scale * scale);
  }
}
