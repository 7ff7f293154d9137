#ifndef TDPWM_ORACLE_HPP
#define TDPWM_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "tdpwm/errors.hpp"
#include "tdpwm/params.hpp"
#include "tdpwm/pattern.hpp"
#include "tdpwm/response.hpp"

// Brute-force reference: integrates the three per-phase equations
//   L di_x/dt + R i_x = (v_xy + v_xz)/3
// from zero current through many periods. Each step spans an interval of
// constant drive and is advanced with its exact exponential solution, so the
// only error left is the transient that has not yet decayed.

namespace tdpwm {

struct SampledWaveforms {
  std::vector<double> beta;  // k / M, k = 0..M-1
  std::vector<double> i_a, i_b, i_c;  // [A]
  std::vector<double> v_a, v_b, v_c;  // leg potentials w.r.t. the DC minus rail [V]
  std::vector<double> v_o;            // load star point [V]
  int periods = 0;
  double drift = 0.0;  // max |i_a(last period) - i_a(previous period)|
};

/// Smallest n with e^{-alpha n / 2} < 1e-12, at least 2, at most 200.
inline int default_burn_in(double alpha) {
  const int n = static_cast<int>(std::ceil(2.0 * 12.0 * std::log(10.0) / alpha));
  return std::clamp(n, 2, 200);
}

namespace detail {

struct LegState {
  int a, b, c;  // 0 or 1
};

/// Leg states consistent with the three line levels; ties (all lines at 0)
/// resolve to the lower rail.
inline LegState legs_from_lines(int ab, int bc) {
  int sc = 0;
  int sb = bc;
  int sa = ab + bc;
  const int lo = std::min({sa, sb, sc});
  return {sa - lo, sb - lo, sc - lo};
}

}  // namespace detail

inline SampledWaveforms integrate(const SwitchingPattern& sp,
                                  const InverterParams& p,
                                  int steps_per_period = 4096,
                                  int n_periods = 0) {
  if (steps_per_period < (1 << 12) ||
      (steps_per_period & (steps_per_period - 1)) != 0) {
    throw DomainError("steps_per_period must be a power of two >= 4096");
  }
  // Auto mode runs one period past the burn-in so that the drift compares
  // two settled periods.
  if (n_periods <= 0) n_periods = default_burn_in(p.alpha) + 1;
  const int M = steps_per_period;

  // Every switching event of the three line voltages over one period.
  std::vector<double> events;
  for (double b : sp.instants()) {
    for (double half : {0.0, 0.5}) {
      for (double third : {0.0, 1.0 / 3.0, 2.0 / 3.0}) {
        events.push_back(detail::wrap_unit(b + half + third));
      }
    }
  }
  for (int k = 0; k <= M; ++k) events.push_back(static_cast<double>(k) / M);
  std::sort(events.begin(), events.end());

  struct Step {
    double h;
    double ua, ub, uc;  // scaled drives [V]
    int sample;         // sample index reached at the step end, or -1
    int legs[3];
  };
  std::vector<Step> steps;
  double prev = 0.0;
  for (double e : events) {
    if (e <= prev) continue;
    const double mid = 0.5 * (prev + e);
    const int ab = line_voltage_value(sp, mid, LinePair::kAB);
    const int bc = line_voltage_value(sp, mid, LinePair::kBC);
    const int ca = line_voltage_value(sp, mid, LinePair::kCA);
    const detail::LegState legs = detail::legs_from_lines(ab, bc);
    Step s{e - prev,
           p.v0 * (ab - ca) / 3.0,
           p.v0 * (bc - ab) / 3.0,
           p.v0 * (ca - bc) / 3.0,
           -1,
           {legs.a, legs.b, legs.c}};
    const double k = e * M;
    if (std::abs(k - std::round(k)) < 1e-9 && std::round(k) < M) {
      s.sample = static_cast<int>(std::round(k));
    }
    steps.push_back(s);
    prev = e;
  }

  SampledWaveforms out;
  out.periods = n_periods;
  out.beta.resize(M);
  for (int k = 0; k < M; ++k) out.beta[k] = static_cast<double>(k) / M;
  for (auto* v : {&out.i_a, &out.i_b, &out.i_c, &out.v_a, &out.v_b, &out.v_c,
                  &out.v_o}) {
    v->assign(M, 0.0);
  }
  std::vector<double> previous_ia(M, 0.0);

  // Sample 0 is taken at the start of each period, before any step.
  double xa = 0.0, xb = 0.0, xc = 0.0;
  auto record = [&](int idx, int period, const int legs[3]) {
    if (period == n_periods - 2) previous_ia[idx] = xa / p.r;
    if (period != n_periods - 1) return;
    out.i_a[idx] = xa / p.r;
    out.i_b[idx] = xb / p.r;
    out.i_c[idx] = xc / p.r;
    out.v_a[idx] = p.v0 * legs[0];
    out.v_b[idx] = p.v0 * legs[1];
    out.v_c[idx] = p.v0 * legs[2];
    out.v_o[idx] = (out.v_a[idx] + out.v_b[idx] + out.v_c[idx]) / 3.0;
  };
  for (int period = 0; period < n_periods; ++period) {
    record(0, period, steps.front().legs);
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const Step& s = steps[k];
      const double decay = std::exp(-p.alpha * s.h);
      xa = s.ua + (xa - s.ua) * decay;
      xb = s.ub + (xb - s.ub) * decay;
      xc = s.uc + (xc - s.uc) * decay;
      if (s.sample > 0) {
        const int* legs = k + 1 < steps.size() ? steps[k + 1].legs : s.legs;
        record(s.sample, period, legs);
      }
    }
  }
  if (n_periods >= 2) {
    for (int k = 0; k < M; ++k) {
      out.drift = std::max(out.drift, std::abs(out.i_a[k] - previous_ia[k]));
    }
  }
  return out;
}

/// max_k |i_a(oracle) - i_a(closed form)| over the sample grid [A].
inline double steady_state_error(const SwitchingPattern& sp,
                                 const InverterParams& p,
                                 int steps_per_period = 4096) {
  const SampledWaveforms w = integrate(sp, p, steps_per_period);
  const PhaseResponse resp(sp, p);
  double err = 0.0;
  for (std::size_t k = 0; k < w.beta.size(); ++k) {
    err = std::max(err, std::abs(w.i_a[k] - resp.v_ra(w.beta[k]) / p.r));
  }
  return err;
}

/// Amplitude of harmonic n of a uniformly sampled periodic signal.
inline double sampled_harmonic_amplitude(std::span<const double> samples,
                                         int n) {
  const std::size_t M = samples.size();
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < M; ++k) {
    const double ang = 2.0 * kPi * static_cast<double>((n * k) % M) / M;
    re += samples[k] * std::cos(ang);
    im += samples[k] * std::sin(ang);
  }
  return 2.0 * std::hypot(re, im) / static_cast<double>(M);
}

}  // namespace tdpwm

#endif  // TDPWM_ORACLE_HPP
