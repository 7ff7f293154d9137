#ifndef TDPWM_OPTIMIZER_HPP
#define TDPWM_OPTIMIZER_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tdpwm/errors.hpp"
#include "tdpwm/objective.hpp"
#include "tdpwm/params.hpp"
#include "tdpwm/pattern.hpp"
#include "tdpwm/qp.hpp"
#include "tdpwm/svpwm.hpp"

// Minimizes the residual current energy over the free instants subject to the
// fundamental pinning (plus optional SHE) equalities and the linear minimum
// gap inequalities.
//
// Primary method is SQP: damped-BFGS Hessian seeded from a finite-difference
// Hessian, dual active-set QP subproblems, l1 merit line search with a
// second-order correction. The gap constraints are linear in theta, so every
// iterate stays feasible for them. If SQP stalls, an augmented Lagrangian
// on the equalities takes over, reusing the same machinery for the
// inequality-only subproblems.
//
// Internally the problem is scaled to O(1): f = e2_scaled / V_Rm^2 and the
// equalities are harmonic-amplitude residuals over V_m. Tolerances apply to
// these scaled quantities.

namespace tdpwm {

/// l1 merit at one penalty weight, before and after an accepted step.
struct MeritStep {
  double before;
  double after;
};

struct OptimizationResult {
  FreePattern initial;
  FreePattern final_pattern;
  ObjectiveReport initial_report;
  ObjectiveReport final_report;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;          // scaled, inf-norm
  double constraint_violation = 0.0;  // scaled, inf-norm of equalities
  std::vector<double> objective_history{};  // scaled objective per iteration
  std::vector<MeritStep> merit_steps{};
  std::string method{};  // "sqp" or "augmented-lagrangian"
  std::string status{};
  int starts = 1;
};

namespace detail {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Nlp {
  int n = 0;
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> grad;
  std::function<Vec(const Vec&)> eq;       // may be empty (no equalities)
  std::function<Mat(const Vec&)> eq_jac;
  Mat G;  // inequality slacks G theta + h >= 0
  Vec h;
};

struct SqpOutcome {
  Vec theta;
  Vec lambda;
  int iterations = 0;
  bool converged = false;
  double kkt = INFINITY;
  double feas = INFINITY;
  std::string status;
  std::vector<double> objective_history;
  std::vector<MeritStep> merit_steps;
};

inline Vec eval_eq(const Nlp& p, const Vec& x) {
  return p.eq ? p.eq(x) : Vec(0);
}
inline Mat eval_jac(const Nlp& p, const Vec& x) {
  return p.eq_jac ? p.eq_jac(x) : Mat(0, p.n);
}

/// Symmetric finite-difference Hessian of f with eigenvalues clamped into
/// [1e-6 max|lambda|, inf), so BFGS starts positive definite.
inline Mat initial_hessian(const Nlp& p, const Vec& x, double step) {
  Mat H(p.n, p.n);
  for (int k = 0; k < p.n; ++k) {
    Vec xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    H.col(k) = (p.grad(xp) - p.grad(xm)) / (2.0 * step);
  }
  H = 0.5 * (H + H.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  Vec ev = es.eigenvalues();
  const double top = std::max(ev.cwiseAbs().maxCoeff(), 1e-8);
  for (int k = 0; k < ev.size(); ++k) ev(k) = std::max(std::abs(ev(k)), 1e-6 * top);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline bool slacks_ok(const Nlp& p, const Vec& x) {
  return ((p.G * x + p.h).array() >= 0.0).all();
}

inline SqpOutcome run_sqp(const Nlp& p, Vec x, Mat B, const SolverConfig& cfg,
                          int max_iterations) {
  SqpOutcome out;
  double rho = 0.0;
  Vec lambda = Vec::Zero(0);

  Vec gf = p.grad(x);
  Vec c = eval_eq(p, x);
  Mat J = eval_jac(p, x);
  double fx = p.f(x);

  auto merit = [&](double f, const Vec& cv) { return f + rho * cv.lpNorm<1>(); };

  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    const Vec s = p.G * x + p.h;
    const QpResult qp = solve_qp(B, gf, J, c, p.G, s);
    if (qp.status != QpStatus::kOptimal) {
      out.status = "qp-failure";
      break;
    }
    const Vec& d = qp.x;
    lambda = qp.lambda_eq;

    const Vec grad_l = gf - J.transpose() * qp.lambda_eq - p.G.transpose() * qp.mu_in;
    const double compl_ =
        s.size() ? (qp.mu_in.array() * s.array()).abs().maxCoeff() : 0.0;
    out.kkt = std::max(grad_l.lpNorm<Eigen::Infinity>(), compl_);
    out.feas = c.size() ? c.lpNorm<Eigen::Infinity>() : 0.0;
    out.objective_history.push_back(fx);
    // At a KKT point the QP step vanishes; its multipliers then are the
    // problem's, so grad_l measures stationarity directly.
    if (out.kkt <= cfg.kkt_tolerance && out.feas <= cfg.constraint_tolerance &&
        d.lpNorm<Eigen::Infinity>() <= std::sqrt(cfg.kkt_tolerance)) {
      out.converged = true;
      out.status = "converged";
      break;
    }
    if (d.lpNorm<Eigen::Infinity>() < cfg.step_tolerance) {
      out.status = "step-tolerance";
      break;
    }

    if (lambda.size()) {
      const double need = lambda.lpNorm<Eigen::Infinity>();
      if (rho < 1.1 * need) rho = 1.5 * need + 1e-8;
    }
    const double phi0 = merit(fx, c);
    const double slope = gf.dot(d) - rho * c.lpNorm<1>();
    auto acceptable = [&](double phi_t, double a) {
      return phi_t <= phi0 + 1e-4 * a * std::min(slope, 0.0) +
                          8.0 * std::numeric_limits<double>::epsilon() *
                              std::abs(phi0);
    };

    Vec x_new;
    bool accepted = false;
    {
      const Vec xt = x + d;
      const Vec ct = eval_eq(p, xt);
      const double ft = p.f(xt);
      if (acceptable(merit(ft, ct), 1.0)) {
        x_new = xt;
        accepted = true;
      } else if (ct.size()) {
        const Mat JJt = J * J.transpose();
        const Vec corr = -J.transpose() * JJt.ldlt().solve(ct);
        const Vec xs = xt + corr;
        if (slacks_ok(p, xs)) {
          const double fs = p.f(xs);
          if (acceptable(merit(fs, eval_eq(p, xs)), 1.0)) {
            x_new = xs;
            accepted = true;
          }
        }
      }
    }
    // Predicted decrease below the rounding noise of f: the merit test can
    // no longer discriminate, so trust the model and take the full step.
    if (!accepted &&
        std::abs(slope) <= 1e3 * std::numeric_limits<double>::epsilon() *
                               std::max(1.0, std::abs(phi0))) {
      x_new = x + d;
      accepted = true;
    }
    for (double a = 0.5; !accepted && a > 1e-10; a *= 0.5) {
      const Vec xt = x + a * d;
      if (acceptable(merit(p.f(xt), eval_eq(p, xt)), a)) {
        x_new = xt;
        accepted = true;
      }
    }
    if (!accepted) {
      out.status = "line-search";
      break;
    }

    const Vec gf_new = p.grad(x_new);
    const Mat J_new = eval_jac(p, x_new);
    const Vec step = x_new - x;
    Vec y = (gf_new - J_new.transpose() * lambda) - (gf - J.transpose() * lambda);
    const Vec Bs = B * step;
    const double sBs = step.dot(Bs);
    const double sy = step.dot(y);
    if (sBs > 0.0) {
      if (sy < 0.2 * sBs) {
        const double w = 0.8 * sBs / (sBs - sy);
        y = w * y + (1.0 - w) * Bs;
      }
      const double sy2 = step.dot(y);
      if (sy2 > 0.0) {
        B += y * y.transpose() / sy2 - Bs * Bs.transpose() / sBs;
        B = 0.5 * (B + B.transpose()).eval();
      }
    }

    x = x_new;
    gf = gf_new;
    J = J_new;
    c = eval_eq(p, x);
    fx = p.f(x);
    out.merit_steps.push_back({phi0, merit(fx, c)});
    if (it + 1 == max_iterations) out.status = "iteration-limit";
  }
  out.theta = x;
  out.lambda = lambda;
  return out;
}

/// Augmented Lagrangian on the equalities; the bound-like gap constraints
/// stay inside every subproblem.
inline SqpOutcome run_augmented_lagrangian(const Nlp& p, Vec x, const Mat& B0,
                                           const SolverConfig& cfg) {
  const int me = static_cast<int>(eval_eq(p, x).size());
  Vec lambda = Vec::Zero(me);
  double mu = 10.0;
  SqpOutcome out;
  double prev_feas = INFINITY;
  int total = 0;
  for (int outer = 0; outer < 50 && total < cfg.max_iterations; ++outer) {
    Nlp sub;
    sub.n = p.n;
    sub.G = p.G;
    sub.h = p.h;
    sub.f = [&, lambda, mu](const Vec& t) {
      const Vec c = eval_eq(p, t);
      return p.f(t) - lambda.dot(c) + 0.5 * mu * c.squaredNorm();
    };
    sub.grad = [&, lambda, mu](const Vec& t) {
      const Vec c = eval_eq(p, t);
      return Vec(p.grad(t) + eval_jac(p, t).transpose() * (mu * c - lambda));
    };
    SolverConfig inner = cfg;
    inner.kkt_tolerance = std::max(cfg.kkt_tolerance, 1e-10);
    const SqpOutcome r =
        run_sqp(sub, x, B0, inner, std::max(1, cfg.max_iterations - total));
    total += r.iterations;
    x = r.theta;
    out.objective_history.insert(out.objective_history.end(),
                                 r.objective_history.begin(),
                                 r.objective_history.end());
    out.merit_steps.insert(out.merit_steps.end(), r.merit_steps.begin(),
                           r.merit_steps.end());
    const Vec c = eval_eq(p, x);
    const double feas = me ? c.lpNorm<Eigen::Infinity>() : 0.0;
    lambda -= mu * c;
    out.feas = feas;
    out.kkt = r.kkt;
    if (feas <= cfg.constraint_tolerance && r.kkt <= cfg.kkt_tolerance) {
      out.converged = true;
      out.status = "converged";
      break;
    }
    if (feas > 0.25 * prev_feas) mu *= 10.0;
    prev_feas = feas;
    out.status = r.status;
  }
  if (!out.converged && out.status.empty()) out.status = "iteration-limit";
  out.iterations = total;
  out.theta = x;
  out.lambda = lambda;
  return out;
}

/// Affine map beta = A theta + b, turned into gap slacks G theta + h.
inline void gap_constraints(const SymmetryLayout& layout, double tau, Mat& G,
                            Vec& h) {
  const int N = layout.instant_count();
  const int n = layout.free_count();
  Mat A = Mat::Zero(N + 2, n);
  Vec b = Vec::Zero(N + 2);
  b(N + 1) = 0.5;
  for (int j = 0; j < N; ++j) {
    const InstantSource& s = layout.sources()[j];
    if (s.free_index >= 0) A(j + 1, s.free_index) = s.sign;
    b(j + 1) = s.offset;
  }
  G = A.bottomRows(N + 1) - A.topRows(N + 1);
  h = (b.tail(N + 1) - b.head(N + 1)).array() - tau;
}

}  // namespace detail

class PwmProblem {
 public:
  PwmProblem(const InverterParams& params, const SolverConfig& config)
      : params_(params), config_(config), layout_(params.pulses) {
    validate_config(config_);
    detail::gap_constraints(layout_, config_.tau, G_, h_);
  }

  int size() const { return layout_.free_count(); }
  const SymmetryLayout& layout() const { return layout_; }

  FreePattern pattern(const Eigen::VectorXd& theta) const {
    return FreePattern(params_.pulses,
                       std::vector<double>(theta.data(), theta.data() + theta.size()));
  }

  double objective(const Eigen::VectorXd& t) const {
    return e2_scaled(pattern(t), params_) / (params_.v_rm() * params_.v_rm());
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& t) const {
    const auto g = objective_gradient(pattern(t), params_);
    return Eigen::Map<const Eigen::VectorXd>(g.data(), g.size()) /
           (params_.v_rm() * params_.v_rm());
  }
  Eigen::VectorXd equalities(const Eigen::VectorXd& t) const {
    const SwitchingPattern sp = expand_pattern(pattern(t), layout_);
    Eigen::VectorXd c(1 + config_.she_orders.size());
    c(0) = fundamental_constraint_residual(sp, params_) / params_.v_m;
    const auto she = she_residuals(sp, config_.she_orders);
    for (std::size_t k = 0; k < she.size(); ++k) {
      c(k + 1) = she_scale(config_.she_orders[k]) * she[k];
    }
    return c;
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& t) const {
    const FreePattern fp = pattern(t);
    Eigen::MatrixXd J(1 + config_.she_orders.size(), size());
    const auto g0 = fundamental_constraint_gradient(fp, params_);
    for (int k = 0; k < size(); ++k) J(0, k) = g0[k] / params_.v_m;
    for (std::size_t i = 0; i < config_.she_orders.size(); ++i) {
      const int m = config_.she_orders[i];
      const auto gi = she_constraint_gradient(fp, m);
      for (int k = 0; k < size(); ++k) J(i + 1, k) = she_scale(m) * gi[k];
    }
    return J;
  }
  Eigen::VectorXd slacks(const Eigen::VectorXd& t) const { return G_ * t + h_; }

  detail::Nlp nlp() const {
    detail::Nlp p;
    p.n = size();
    p.f = [this](const Eigen::VectorXd& t) { return objective(t); };
    p.grad = [this](const Eigen::VectorXd& t) { return gradient(t); };
    p.eq = [this](const Eigen::VectorXd& t) { return equalities(t); };
    p.eq_jac = [this](const Eigen::VectorXd& t) { return jacobian(t); };
    p.G = G_;
    p.h = h_;
    return p;
  }

 private:
  // SHE residual -> |V_m| / V_m, i.e. harmonic amplitude relative to the
  // fundamental command.
  double she_scale(int m) const {
    return 2.0 * params_.v0 / (m * kPi) / params_.v_m;
  }

  InverterParams params_;
  SolverConfig config_;
  SymmetryLayout layout_;
  Eigen::MatrixXd G_;
  Eigen::VectorXd h_;
};

namespace detail {

inline OptimizationResult optimize_from(const PwmProblem& prob,
                                        const InverterParams& params,
                                        const SolverConfig& cfg,
                                        const FreePattern& seed) {
  const Nlp nlp = prob.nlp();
  const Vec x0 = Eigen::Map<const Vec>(seed.theta().data(), seed.size());
  const Vec s0 = prob.slacks(x0);
  const double min_gap = (s0.array() + cfg.tau).minCoeff();
  const Mat B0 = initial_hessian(nlp, x0, std::min(1e-6, 0.25 * min_gap));

  SqpOutcome r = run_sqp(nlp, x0, B0, cfg, cfg.max_iterations);
  std::string method = "sqp";
  if (!r.converged) {
    SqpOutcome al = run_augmented_lagrangian(nlp, r.theta, B0, cfg);
    al.iterations += r.iterations;
    al.objective_history.insert(al.objective_history.begin(),
                                r.objective_history.begin(),
                                r.objective_history.end());
    al.merit_steps.insert(al.merit_steps.begin(), r.merit_steps.begin(),
                          r.merit_steps.end());
    if (al.converged || al.feas < r.feas) {
      r = std::move(al);
      method = "augmented-lagrangian";
    }
  }

  OptimizationResult out{seed,
                         prob.pattern(r.theta),
                         make_report(seed, params, cfg),
                         make_report(prob.pattern(r.theta), params, cfg)};
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.kkt_residual = r.kkt;
  out.constraint_violation = prob.equalities(r.theta).lpNorm<Eigen::Infinity>();
  out.objective_history = std::move(r.objective_history);
  out.merit_steps = std::move(r.merit_steps);
  out.method = method;
  out.status = r.status;
  return out;
}

}  // namespace detail

/// Optimizes from `seed` (default: calibrated SVPWM). Non-convergence is
/// reported through the result, not thrown. Deterministic for a fixed
/// config, including the multistart jitter.
inline OptimizationResult optimize(const InverterParams& params,
                                   const SolverConfig& config,
                                   std::optional<FreePattern> seed = std::nullopt) {
  validate_config(config);
  const PwmProblem prob(params, config);
  const FreePattern start = seed ? *seed : svpwm_seed(params).free;
  if (start.pulses() != params.pulses) {
    throw SeedError("seed has P = " + std::to_string(start.pulses()) +
                    ", parameters have P = " + std::to_string(params.pulses));
  }
  const Eigen::VectorXd x0 =
      Eigen::Map<const Eigen::VectorXd>(start.theta().data(), start.size());
  const Eigen::VectorXd s0 = prob.slacks(x0);
  Eigen::Index worst = 0;
  if (s0.minCoeff(&worst) < 0.0) {
    throw SeedError("seed violates the minimum gap at gap " +
                    std::to_string(worst) + " (slack " +
                    std::to_string(s0(worst)) + ")");
  }

  OptimizationResult best = detail::optimize_from(prob, params, config, start);
  if (config.multistart <= 0) return best;

  std::mt19937_64 rng(config.seed);
  const double radius = 0.4 * s0.minCoeff();
  std::uniform_real_distribution<double> jitter(-radius, radius);
  for (int k = 0; k < config.multistart; ++k) {
    std::vector<double> t = start.theta();
    for (double& v : t) v += jitter(rng);
    OptimizationResult r =
        detail::optimize_from(prob, params, config, FreePattern(params.pulses, t));
    const bool better =
        (r.converged && !best.converged) ||
        (r.converged == best.converged &&
         r.final_report.e2_scaled < best.final_report.e2_scaled);
    if (better) {
      r.initial = best.initial;
      r.initial_report = best.initial_report;
      best = std::move(r);
    }
  }
  best.starts = 1 + config.multistart;
  return best;
}

inline OptimizationResult optimize(const FreePattern& fp0,
                                   const InverterParams& params,
                                   const SolverConfig& config) {
  return optimize(params, config, fp0);
}

inline OptimizationResult optimize_with_she(const InverterParams& params,
                                            SolverConfig config,
                                            std::vector<int> orders,
                                            std::optional<FreePattern> seed = std::nullopt) {
  config.she_orders = std::move(orders);
  return optimize(params, config, std::move(seed));
}

inline OptimizationResult optimize_with_she(const FreePattern& fp0,
                                            const InverterParams& params,
                                            const SolverConfig& config) {
  if (config.she_orders.empty()) {
    throw DomainError("optimize_with_she needs at least one SHE order");
  }
  return optimize(params, config, fp0);
}

}  // namespace tdpwm

#endif  // TDPWM_OPTIMIZER_HPP
