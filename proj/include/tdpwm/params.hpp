#ifndef TDPWM_PARAMS_HPP
#define TDPWM_PARAMS_HPP

#include <cmath>
#include <numbers>
#include <string>

#include "tdpwm/errors.hpp"

namespace tdpwm {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSqrt3 = std::numbers::sqrt3;

/// Electrical setup of the inverter and RL load, plus every derived quantity
/// the scaled problem needs. Build through derive_params(); the fields are
/// consistent with each other only when produced that way.
struct InverterParams {
  double v0 = 0.0;   // DC bus voltage [V]
  double r = 0.0;    // load resistance [ohm]
  double l = 0.0;    // load inductance [H]
  double f = 0.0;    // fundamental frequency [Hz]
  double i_m = 0.0;  // target fundamental phase-current amplitude [A]
  int pulses = 0;    // pulses per pulse group

  double period = 0.0;  // T = 1/f [s]
  double omega = 0.0;   // 2*pi*f [rad/s]
  double alpha = 0.0;   // R*T/L
  double phi = 0.0;     // load angle, tan(phi) = 2*pi/alpha
  double v_m = 0.0;     // required line-voltage fundamental amplitude [V]
  double f_sw = 0.0;    // 6*P*f [Hz]

  /// V_m beyond the linear (sinusoidal) modulation range; realizable, but
  /// only with pulse dropping. Reported, never fatal.
  bool overmodulated = false;

  /// Amplitude of the reference resistor voltage R*i_a,1, i.e. V_{R,m}.
  double v_rm() const { return r * i_m; }

  /// Load impedance magnitude at harmonic order n.
  double impedance(int n = 1) const {
    return std::hypot(r, n * omega * l);
  }

  /// Modulation depth V_m / V0.
  double depth() const { return v_m / v0; }
};

namespace detail {

inline void require_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(name) + " must be positive and finite");
  }
}

}  // namespace detail

/// Upper bound on V_m: the fundamental of a square-wave line voltage.
inline double max_line_fundamental(double v0) { return 4.0 * v0 / kPi; }

inline void require_odd_pulses(int pulses) {
  if (pulses < 1 || pulses % 2 == 0) {
    throw PatternError("pulse count P must be an odd natural number, got " +
                       std::to_string(pulses));
  }
}

inline InverterParams derive_params(double v0, double r, double l, double f,
                                    double i_m, int pulses) {
  detail::require_positive(v0, "V0");
  detail::require_positive(r, "R");
  detail::require_positive(l, "L");
  detail::require_positive(f, "f");
  detail::require_positive(i_m, "I_m");
  require_odd_pulses(pulses);

  InverterParams p;
  p.v0 = v0;
  p.r = r;
  p.l = l;
  p.f = f;
  p.i_m = i_m;
  p.pulses = pulses;
  p.period = 1.0 / f;
  p.omega = 2.0 * kPi * f;
  p.alpha = r * p.period / l;
  p.phi = std::atan(2.0 * kPi / p.alpha);
  p.v_m = kSqrt3 * i_m * p.impedance(1);
  p.f_sw = 6.0 * pulses * f;

  if (!(p.v_m <= max_line_fundamental(v0))) {
    throw RangeError("requested V_m = " + std::to_string(p.v_m) +
                     " V exceeds the square-wave bound 4*V0/pi = " +
                     std::to_string(max_line_fundamental(v0)) + " V");
  }
  p.overmodulated = p.v_m > v0;
  return p;
}

/// Parameters from the dimensionless description (alpha, V_m/V0). R and f fix
/// the absolute scale; L and I_m are back-computed so that the scaled problem
/// is exactly the requested one.
inline InverterParams derive_scaled_params(double alpha, double depth,
                                           double v0, double r, double f,
                                           int pulses) {
  detail::require_positive(alpha, "alpha");
  detail::require_positive(depth, "V_m/V0");
  detail::require_positive(r, "R");
  detail::require_positive(f, "f");
  const double l = r / (alpha * f);
  const double z = std::hypot(r, 2.0 * kPi * f * l);
  const double i_m = depth * v0 / (kSqrt3 * z);
  return derive_params(v0, r, l, f, i_m, pulses);
}

}  // namespace tdpwm

#endif  // TDPWM_PARAMS_HPP
