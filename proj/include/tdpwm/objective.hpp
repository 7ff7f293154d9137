#ifndef TDPWM_OBJECTIVE_HPP
#define TDPWM_OBJECTIVE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tdpwm/energy.hpp"
#include "tdpwm/errors.hpp"
#include "tdpwm/params.hpp"
#include "tdpwm/pattern.hpp"
#include "tdpwm/response.hpp"
#include "tdpwm/spectrum.hpp"

namespace tdpwm {

struct SolverConfig {
  double tau = 1e-4;            // scaled minimum gap between instants
  std::vector<int> she_orders;  // harmonics to eliminate from v_ab
  double kkt_tolerance = 1e-8;
  double constraint_tolerance = 1e-8;
  double step_tolerance = 1e-12;
  int max_iterations = 500;
  int multistart = 0;         // extra jittered starts, 0 = single run
  std::uint64_t seed = 0;     // RNG seed for the jittered starts
};

/// SHE orders must be odd, above 1 and not triplen: even and triplen
/// harmonics already vanish by symmetry, so a constraint on them would be
/// degenerate.
inline void validate_she_orders(std::span<const int> orders) {
  for (int m : orders) {
    if (m <= 1 || m % 2 == 0 || m % 3 == 0) {
      throw DomainError("SHE order " + std::to_string(m) +
                        " must be odd, greater than 1 and not divisible by 3");
    }
  }
}

inline void validate_config(const SolverConfig& c) {
  if (!(c.tau > 0.0)) throw DomainError("tau must be positive");
  if (c.max_iterations < 1) throw DomainError("max_iterations must be >= 1");
  validate_she_orders(c.she_orders);
}

/// Closed-form objective: integral over (0, 1/2) of
/// [v_R,a(beta) - V_R,m sin(2 pi beta - phi - pi/6)]^2 [V^2].
inline double e2_scaled(const FreePattern& fp, const InverterParams& params) {
  return residual_energy(PhaseResponse(expand_pattern(fp), params));
}

/// (2 V0/pi) sum (-1)^{j+1} cos(2 pi beta_j) - V_m [V].
inline double fundamental_constraint_residual(const SwitchingPattern& sp,
                                              const InverterParams& params) {
  return line_fundamental(sp, params.v0) - params.v_m;
}

/// sum_j (-1)^j cos(2 pi m beta_j) for a single order, without checking m.
inline double she_residual(std::span<const double> instants, int m) {
  return -detail::alternating_cosine_sum(instants, m);
}

/// sum_j (-1)^j cos(2 pi m beta_j) for each order m.
inline std::vector<double> she_residuals(const SwitchingPattern& sp,
                                         std::span<const int> orders) {
  validate_she_orders(orders);
  std::vector<double> out;
  out.reserve(orders.size());
  for (int m : orders) {
    out.push_back(she_residual(sp.instants(), m));
  }
  return out;
}

/// Slacks beta_{j+1} - beta_j - tau, j = 0..6P, on the expanded pattern.
/// Feasible iff all are >= 0. Does not require a monotone expansion.
inline std::vector<double> monotonicity_constraints(const FreePattern& fp,
                                                    double tau) {
  SymmetryLayout layout(fp.pulses());
  std::vector<double> gaps = instant_gaps(layout.expand(fp.theta()));
  for (double& g : gaps) g -= tau;
  return gaps;
}

/// d e2_scaled / d theta.
inline std::vector<double> objective_gradient(const FreePattern& fp,
                                              const InverterParams& params) {
  SymmetryLayout layout(fp.pulses());
  PhaseResponse resp(expand_pattern(fp, layout), params);
  return layout.pullback(residual_energy_gradient(resp));
}

/// d/d theta of the fundamental residual.
inline std::vector<double> fundamental_constraint_gradient(
    const FreePattern& fp, const InverterParams& params) {
  SymmetryLayout layout(fp.pulses());
  const std::vector<double> beta = layout.expand(fp.theta());
  std::vector<double> d(beta.size());
  for (std::size_t j = 0; j < beta.size(); ++j) {
    const double s = -4.0 * params.v0 * std::sin(2.0 * kPi * beta[j]);
    d[j] = (j % 2 == 0) ? s : -s;
  }
  return layout.pullback(d);
}

/// d/d theta of the SHE residual of order m.
inline std::vector<double> she_constraint_gradient(const FreePattern& fp,
                                                   int m) {
  SymmetryLayout layout(fp.pulses());
  const std::vector<double> beta = layout.expand(fp.theta());
  std::vector<double> d(beta.size());
  for (std::size_t j = 0; j < beta.size(); ++j) {
    const double s = 2.0 * kPi * m * std::sin(2.0 * kPi * m * beta[j]);
    d[j] = (j % 2 == 0) ? s : -s;
  }
  return layout.pullback(d);
}

struct ObjectiveReport {
  double e2_scaled = 0.0;  // [V^2]
  double e2 = 0.0;         // [A^2 s], e2_scaled = (R^2/T) e2
  double i_f = 0.0;        // [A]
  double thd = 0.0;
  double fundamental_residual = 0.0;  // [V]
  std::vector<double> she_residuals;
  std::vector<double> monotonicity_slacks;

  double min_slack() const {
    double m = INFINITY;
    for (double s : monotonicity_slacks) m = std::min(m, s);
    return m;
  }
};

inline ObjectiveReport make_report(const FreePattern& fp,
                                   const InverterParams& params,
                                   const SolverConfig& config) {
  const SwitchingPattern sp = expand_pattern(fp);
  const TimeDomainThd td = thd_timedomain(sp, params);
  ObjectiveReport r;
  r.e2_scaled = td.e2_scaled;
  r.e2 = td.e2;
  r.i_f = td.i_f;
  r.thd = td.thd;
  r.fundamental_residual = fundamental_constraint_residual(sp, params);
  r.she_residuals = she_residuals(sp, config.she_orders);
  r.monotonicity_slacks = monotonicity_constraints(fp, config.tau);
  return r;
}

}  // namespace tdpwm

#endif  // TDPWM_OBJECTIVE_HPP
