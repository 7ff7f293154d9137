#ifndef TDPWM_ENERGY_HPP
#define TDPWM_ENERGY_HPP

#include <cmath>
#include <utility>
#include <vector>

#include "tdpwm/params.hpp"
#include "tdpwm/response.hpp"

// Exact integrals of squared residuals between a piecewise-exponential
// waveform and a sinusoid, plus their derivatives with respect to the
// switching instants. Every term has an elementary antiderivative; exponents
// are always local to a segment and therefore non-positive.

namespace tdpwm {

/// amplitude * sin(2*pi*beta - shift)
struct SinusoidReference {
  double amplitude;
  double shift;
};

/// Reference phase voltage R * i_a,1 in scaled time.
inline SinusoidReference phase_reference(const InverterParams& p) {
  return {p.v_rm(), p.phi + kPi / 6.0};
}

namespace detail {

/// 1 - e^{-x} for x >= 0 without cancellation.
inline double one_minus_exp(double x) { return -std::expm1(-x); }

/// Integral over u in [0, h] of e^{-alpha u} sin(2 pi u + theta0).
inline double damped_sine_integral(double alpha, double h, double theta0) {
  const double w = 2.0 * kPi;
  const double th1 = w * h + theta0;
  const double num = alpha * std::sin(theta0) + w * std::cos(theta0) -
                     std::exp(-alpha * h) *
                         (alpha * std::sin(th1) + w * std::cos(th1));
  return num / (alpha * alpha + w * w);
}

/// Per-segment weight K such that the integral of (v - ref)(beta) against
/// g e^{-alpha (beta - lo)} over the segment equals g * K.
inline double exponential_moment(const PiecewiseWaveform::Segment& s,
                                 double alpha, const SinusoidReference& ref) {
  const double h = s.hi - s.lo;
  const double theta0 = 2.0 * kPi * s.lo - ref.shift;
  return s.amplitude * one_minus_exp(2.0 * alpha * h) / (2.0 * alpha) +
         s.level * one_minus_exp(alpha * h) / alpha -
         ref.amplitude * damped_sine_integral(alpha, h, theta0);
}

/// Position inside the anti-period and the sign of the extension.
inline std::pair<double, double> fold_half(double x) {
  double w = wrap_unit(x);
  if (w >= 0.5) return {w - 0.5, -1.0};
  return {w, 1.0};
}

}  // namespace detail

/// Integral over (0, 1/2) of [w(beta) - ref(beta)]^2.
inline double residual_energy(const PiecewiseWaveform& w,
                              const SinusoidReference& ref) {
  const double alpha = w.alpha();
  const double V = ref.amplitude;
  double total = 0.0;
  for (const auto& s : w.segments()) {
    const double h = s.hi - s.lo;
    if (h <= 0.0) continue;
    const double c = s.amplitude;
    const double D = s.level;
    const double ta = 2.0 * kPi * s.lo - ref.shift;
    const double tb = 2.0 * kPi * s.hi - ref.shift;
    const double exp2 = c * c * detail::one_minus_exp(2.0 * alpha * h) /
                        (2.0 * alpha);
    const double cross_exp = 2.0 * c * D * detail::one_minus_exp(alpha * h) /
                             alpha;
    const double sq_sine =
        V * V * (0.5 * h - (std::sin(2.0 * tb) - std::sin(2.0 * ta)) /
                               (8.0 * kPi));
    const double exp_sine =
        2.0 * c * V * detail::damped_sine_integral(alpha, h, ta);
    const double const_sine =
        2.0 * D * V * (std::cos(ta) - std::cos(tb)) / (2.0 * kPi);
    total += exp2 + D * D * h + cross_exp + sq_sine - exp_sine - const_sine;
  }
  return total;
}

/// Scaled residual energy of phase a against its reference fundamental.
inline double residual_energy(const PhaseResponse& resp) {
  return residual_energy(resp.phase(), phase_reference(resp.params()));
}

/// d/dbeta_j of residual_energy(resp) for every instant j of the pattern.
///
/// Moving beta_j shifts an edge of v_ab, i.e. adds an impulse of weight
/// (-1)^j V0 to the drive; the line response to it is the anti-periodic
/// kernel G(s) = alpha/(1 + e^{-alpha/2}) e^{-alpha s}. Phase a sees the
/// kernel at beta_j and, negated, at beta_j - 1/3.
inline std::vector<double> residual_energy_gradient(const PhaseResponse& resp) {
  const PiecewiseWaveform& w = resp.phase();
  const double alpha = w.alpha();
  const SinusoidReference ref = phase_reference(resp.params());
  const auto& segs = w.segments();

  std::vector<double> moment(segs.size());
  for (std::size_t k = 0; k < segs.size(); ++k) {
    moment[k] = detail::exponential_moment(segs[k], alpha, ref);
  }

  const double kernel_scale = alpha / (1.0 + std::exp(-0.5 * alpha));
  auto kernel_integral = [&](double source) {
    double acc = 0.0;
    for (std::size_t k = 0; k < segs.size(); ++k) {
      const double h = segs[k].hi - segs[k].lo;
      if (h <= 0.0) continue;
      const auto [x_mid, sign] =
          detail::fold_half(0.5 * (segs[k].lo + segs[k].hi) - source);
      const double x_lo = std::max(x_mid - 0.5 * h, 0.0);
      acc += sign * kernel_scale * std::exp(-alpha * x_lo) * moment[k];
    }
    return acc;
  };

  const auto& beta = resp.pattern().instants();
  const double v0 = resp.params().v0;
  std::vector<double> grad(beta.size());
  for (std::size_t j = 0; j < beta.size(); ++j) {
    const double jump = ((j + 1) % 2 == 0) ? v0 : -v0;
    grad[j] = 2.0 * jump / 3.0 *
              (kernel_integral(beta[j]) - kernel_integral(beta[j] - 1.0 / 3.0));
  }
  return grad;
}

}  // namespace tdpwm

#endif  // TDPWM_ENERGY_HPP
