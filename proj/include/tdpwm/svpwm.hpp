#ifndef TDPWM_SVPWM_HPP
#define TDPWM_SVPWM_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tdpwm/errors.hpp"
#include "tdpwm/params.hpp"
#include "tdpwm/pattern.hpp"
#include "tdpwm/spectrum.hpp"

// Conventional space-vector PWM used as the optimizer seed and as the
// comparison baseline.
//
// The half period is cut into 3P pulse periods Ts = T/(6P). In each one the
// reference is sampled once, the leg duties follow from min-max zero-sequence
// injection (equivalent to centred zero vectors), and every leg switches
// exactly once: legs turn off in even pulse periods and on in odd ones, so the
// 111 and 000 zero vectors sit on alternating period boundaries. v_ab then
// carries exactly one pulse per pulse period. With centre sampling this
// layout is quarter-wave symmetric and lands on the symmetry manifold.

namespace tdpwm {

struct SvpwmSpec {
  int pulses = 0;
  /// Line-voltage fundamental command over V0; linear range is (0, 1].
  double m_index = 0.0;
  /// Where in each pulse period the reference is sampled, as a fraction of
  /// Ts. 0.5 (centre) is the only value that is exactly symmetric.
  double sample_position = 0.5;
};

inline void validate_spec(const SvpwmSpec& spec) {
  require_odd_pulses(spec.pulses);
  if (!(spec.m_index > 0.0 && spec.m_index <= 1.0)) {
    throw RangeError("SVPWM modulation index must lie in (0, 1], got " +
                     std::to_string(spec.m_index));
  }
  if (!(spec.sample_position >= 0.0 && spec.sample_position <= 1.0)) {
    throw DomainError("sample position must lie in [0, 1]");
  }
}

/// v_ab edges on (0, 1/2) before any symmetry projection.
inline std::vector<double> svpwm_raw_instants(const SvpwmSpec& spec) {
  validate_spec(spec);
  const int periods = 3 * spec.pulses;
  const double ts = 0.5 / periods;
  const double amp = spec.m_index / kSqrt3;
  std::vector<double> edges;
  edges.reserve(2 * periods);
  for (int k = 0; k < periods; ++k) {
    const double start = k * ts;
    const double angle = 2.0 * kPi * (start + spec.sample_position * ts);
    const double va = amp * std::sin(angle - kPi / 6.0);
    const double vb = amp * std::sin(angle - 5.0 * kPi / 6.0);
    const double vc = amp * std::sin(angle + kPi / 2.0);
    const double zero_seq = -0.5 * (std::max({va, vb, vc}) + std::min({va, vb, vc}));
    const double da = 0.5 + va + zero_seq;
    const double db = 0.5 + vb + zero_seq;
    if (k % 2 == 0) {
      edges.push_back(start + db * ts);
      edges.push_back(start + da * ts);
    } else {
      edges.push_back(start + ts - da * ts);
      edges.push_back(start + ts - db * ts);
    }
  }
  return edges;
}

struct ProjectionResult {
  FreePattern free;
  double displacement;  // max |beta_projected - beta_raw|
};

/// Least-squares projection onto the symmetry manifold. Every instant is
/// +-theta_k + const, so the normal equations are diagonal and theta_k is the
/// mean of the instants that depend on it.
inline ProjectionResult project_to_symmetry(std::span<const double> raw,
                                            int pulses) {
  require_odd_pulses(pulses);
  if (static_cast<int>(raw.size()) != 6 * pulses) {
    throw SeedError("projection needs 6P = " + std::to_string(6 * pulses) +
                    " instants, got " + std::to_string(raw.size()));
  }
  for (std::size_t j = 1; j < raw.size(); ++j) {
    if (!(raw[j] > raw[j - 1])) {
      throw SeedError("raw instants are not strictly increasing");
    }
  }
  SymmetryLayout layout(pulses);
  std::vector<double> sum(layout.free_count(), 0.0);
  std::vector<int> count(layout.free_count(), 0);
  for (std::size_t j = 0; j < raw.size(); ++j) {
    const InstantSource& s = layout.sources()[j];
    if (s.free_index < 0) continue;
    sum[s.free_index] += s.sign * (raw[j] - s.offset);
    ++count[s.free_index];
  }
  std::vector<double> theta(sum.size());
  for (std::size_t k = 0; k < sum.size(); ++k) theta[k] = sum[k] / count[k];

  const std::vector<double> beta = layout.expand(theta);
  double disp = 0.0;
  for (std::size_t j = 0; j < raw.size(); ++j) {
    disp = std::max(disp, std::abs(beta[j] - raw[j]));
  }
  const std::vector<double> gaps = instant_gaps(beta);
  if (!std::all_of(gaps.begin(), gaps.end(), [](double g) { return g > 0.0; })) {
    throw SeedError("projected pattern is not strictly increasing");
  }
  return {FreePattern(pulses, std::move(theta)), disp};
}

inline SwitchingPattern svpwm_pattern(const SvpwmSpec& spec) {
  return expand_pattern(
      project_to_symmetry(svpwm_raw_instants(spec), spec.pulses).free);
}

inline SwitchingPattern svpwm_pattern(const SvpwmSpec& spec,
                                      const InverterParams& params) {
  if (spec.pulses != params.pulses) {
    throw PatternError("SVPWM spec and parameters disagree on P");
  }
  return svpwm_pattern(spec);
}

struct SvpwmSeed {
  SvpwmSpec spec;
  FreePattern free;
  SwitchingPattern pattern;
  double displacement;
};

/// SVPWM whose v_ab fundamental equals V_m exactly. Regular sampling makes
/// the generated fundamental fall slightly short of the command, so the
/// index is corrected by a secant iteration on line_fundamental().
inline SvpwmSeed svpwm_seed(const InverterParams& params,
                            double sample_position = 0.5) {
  const double target = params.depth();
  SvpwmSpec spec{params.pulses, target, sample_position};
  validate_spec(spec);

  auto fundamental_error = [&](double m) {
    SvpwmSpec s = spec;
    s.m_index = std::min(m, 1.0);
    return line_fundamental(svpwm_pattern(s), params.v0) / params.v0 - target;
  };
  double m0 = target;
  double e0 = fundamental_error(m0);
  double m1 = std::min(target - e0, 1.0);
  double e1 = fundamental_error(m1);
  for (int it = 0; it < 30 && std::abs(e1) > 1e-15 && e1 != e0; ++it) {
    const double m2 = std::min(m1 - e1 * (m1 - m0) / (e1 - e0), 1.0);
    m0 = m1;
    e0 = e1;
    m1 = m2;
    e1 = fundamental_error(m1);
  }
  spec.m_index = std::min(m1, 1.0);

  ProjectionResult proj =
      project_to_symmetry(svpwm_raw_instants(spec), spec.pulses);
  SwitchingPattern sp = expand_pattern(proj.free);
  return {spec, std::move(proj.free), std::move(sp), proj.displacement};
}

/// Calibrated SVPWM with every free instant moved by an independent uniform
/// draw of at most `fraction` of the smallest gap, so the result stays
/// strictly increasing. Used as a source of generic valid patterns.
template <class Rng>
FreePattern jittered_svpwm(const InverterParams& params, Rng& rng,
                           double fraction = 0.4) {
  const SvpwmSeed seed = svpwm_seed(params);
  const std::vector<double> gaps = instant_gaps(seed.pattern.instants());
  const double radius =
      fraction * *std::min_element(gaps.begin(), gaps.end());
  std::uniform_real_distribution<double> u(-radius, radius);
  std::vector<double> theta = seed.free.theta();
  for (double& t : theta) t += u(rng);
  return FreePattern(params.pulses, std::move(theta));
}

}  // namespace tdpwm

#endif  // TDPWM_SVPWM_HPP
