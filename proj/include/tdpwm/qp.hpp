#ifndef TDPWM_QP_HPP
#define TDPWM_QP_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

// Dense strictly convex QP
//
//   min 1/2 x'Hx + g'x   s.t.  A_eq x + b_eq = 0,  A_in x + b_in >= 0
//
// by the Goldfarb-Idnani dual active-set method. Problems here have at most a
// few dozen variables, so the projected quantities are rebuilt from a
// Cholesky factor of H whenever the active set changes instead of being
// updated in place.

namespace tdpwm {

enum class QpStatus { kOptimal, kInfeasible, kIterationLimit };

struct QpResult {
  QpStatus status = QpStatus::kInfeasible;
  Eigen::VectorXd x;
  // Lagrangian f - lambda'(A_eq x + b_eq) - mu'(A_in x + b_in), mu >= 0.
  Eigen::VectorXd lambda_eq;
  Eigen::VectorXd mu_in;
  int iterations = 0;
};

inline QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                         const Eigen::MatrixXd& A_eq, const Eigen::VectorXd& b_eq,
                         const Eigen::MatrixXd& A_in, const Eigen::VectorXd& b_in,
                         int max_iterations = 1000) {
  const int n = static_cast<int>(g.size());
  const int me = static_cast<int>(b_eq.size());
  const int mi = static_cast<int>(b_in.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  QpResult res;
  res.lambda_eq = Eigen::VectorXd::Zero(me);
  res.mu_in = Eigen::VectorXd::Zero(mi);
  const Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) return res;

  Eigen::VectorXd x = -llt.solve(g);
  // Constraint ids: c < me is equality c, otherwise inequality c - me.
  std::vector<int> active;
  std::vector<double> u;
  std::vector<double> orient(me, 1.0);
  const double zero_tol = 1e-13 * (1.0 + H.cwiseAbs().maxCoeff());

  auto normal = [&](int c) -> Eigen::VectorXd {
    if (c < me) return orient[c] * A_eq.row(c).transpose();
    return A_in.row(c - me).transpose();
  };
  auto value = [&](int c) {
    if (c < me) return orient[c] * (A_eq.row(c).dot(x) + b_eq(c));
    return A_in.row(c - me).dot(x) + b_in(c - me);
  };

  // z = H^{-1}(np - N r), r = (N'H^{-1}N)^{-1} N'H^{-1} np.
  auto directions = [&](const Eigen::VectorXd& np, Eigen::VectorXd& z,
                        Eigen::VectorXd& r) {
    const Eigen::VectorXd hn = llt.solve(np);
    if (active.empty()) {
      z = hn;
      r.resize(0);
      return;
    }
    Eigen::MatrixXd N(n, static_cast<int>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) N.col(k) = normal(active[k]);
    const Eigen::MatrixXd hN = llt.solve(N);
    r = (N.transpose() * hN).ldlt().solve(N.transpose() * hn);
    z = hn - hN * r;
  };

  // Makes constraint c active, dropping blocking inequalities on the way.
  // Returns false when the constraints are inconsistent.
  auto add_constraint = [&](int c) -> bool {
    double u_enter = 0.0;
    for (;;) {
      if (++res.iterations > max_iterations) return false;
      const Eigen::VectorXd np = normal(c);
      Eigen::VectorXd z, r;
      directions(np, z, r);

      double t1 = kInf;
      int block = -1;
      for (std::size_t k = 0; k < active.size(); ++k) {
        if (active[k] < me || r(k) <= 0.0) continue;
        const double ratio = u[k] / r(k);
        if (ratio < t1) {
          t1 = ratio;
          block = static_cast<int>(k);
        }
      }
      const double zn = z.dot(np);
      const double t2 = zn > zero_tol ? -value(c) / zn : kInf;
      if (!std::isfinite(t1) && !std::isfinite(t2)) return false;

      const double t = std::min(t1, t2);
      if (std::isfinite(t2)) x += t * z;
      for (std::size_t k = 0; k < active.size(); ++k) u[k] -= t * r(k);
      u_enter += t;
      if (t2 <= t1) {
        active.push_back(c);
        u.push_back(u_enter);
        return true;
      }
      active.erase(active.begin() + block);
      u.erase(u.begin() + block);
    }
  };

  for (int c = 0; c < me; ++c) {
    const double v = A_eq.row(c).dot(x) + b_eq(c);
    orient[c] = v > 0.0 ? -1.0 : 1.0;
    Eigen::VectorXd z, r;
    directions(normal(c), z, r);
    if (z.dot(normal(c)) <= zero_tol) {
      // Dependent on the equalities already active: consistent or not.
      if (std::abs(v) > 1e-10 * (1.0 + std::abs(b_eq(c)))) return res;
      continue;
    }
    if (!add_constraint(c)) {
      if (res.iterations > max_iterations) res.status = QpStatus::kIterationLimit;
      return res;
    }
  }

  for (;;) {
    int worst = -1;
    double worst_val = 0.0;
    for (int i = 0; i < mi; ++i) {
      bool is_active = false;
      for (int a : active) is_active |= (a == me + i);
      if (is_active) continue;
      const double v = A_in.row(i).dot(x) + b_in(i);
      const double tol = 1e-12 * (1.0 + A_in.row(i).cwiseAbs().maxCoeff() *
                                            x.cwiseAbs().maxCoeff() +
                                  std::abs(b_in(i)));
      if (v < -tol && v < worst_val) {
        worst_val = v;
        worst = i;
      }
    }
    if (worst < 0) break;
    if (!add_constraint(me + worst)) {
      if (res.iterations > max_iterations) res.status = QpStatus::kIterationLimit;
      return res;
    }
  }

  res.status = QpStatus::kOptimal;
  res.x = x;
  for (std::size_t k = 0; k < active.size(); ++k) {
    const int c = active[k];
    if (c < me) {
      res.lambda_eq(c) = orient[c] * u[k];
    } else {
      res.mu_in(c - me) = u[k];
    }
  }
  return res;
}

}  // namespace tdpwm

#endif  // TDPWM_QP_HPP
