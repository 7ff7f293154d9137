#ifndef TDPWM_SPECTRUM_HPP
#define TDPWM_SPECTRUM_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "tdpwm/energy.hpp"
#include "tdpwm/errors.hpp"
#include "tdpwm/params.hpp"
#include "tdpwm/pattern.hpp"
#include "tdpwm/response.hpp"

namespace tdpwm {

/// Harmonic n is amplitude[n] * sin(n * omega * t + phase[n]). Index 0 is
/// unused. Exact Fourier coefficients of ideal waveforms, truncated at n_max.
struct HarmonicSpectrum {
  int n_max = 0;
  std::vector<double> amplitude;
  std::vector<double> phase;

  explicit HarmonicSpectrum(int n = 0)
      : n_max(n), amplitude(n + 1, 0.0), phase(n + 1, 0.0) {}

  double fundamental() const { return n_max >= 1 ? amplitude[1] : 0.0; }
  double operator[](int n) const { return n <= n_max ? amplitude[n] : 0.0; }
};

/// Truncation order used when the caller does not pick one.
constexpr int default_harmonic_order(int pulses) {
  return std::max(300, 60 * pulses);
}

namespace detail {

inline double wrap_phase(double x) {
  x = std::remainder(x, 2.0 * kPi);
  return x <= -kPi ? x + 2.0 * kPi : x;
}

/// sum_j (-1)^{j+1} cos(2 pi n beta_j), j 1-based.
inline double alternating_cosine_sum(std::span<const double> beta, int n) {
  double s = 0.0;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    // Reduce n*beta mod 1 first; keeps the argument small for large n.
    const double x = n * beta[j];
    const double c = std::cos(2.0 * kPi * (x - std::floor(x)));
    s += (j % 2 == 0) ? c : -c;
  }
  return s;
}

}  // namespace detail

/// Line-voltage spectrum of a half-wave and quarter-wave symmetric v_ab with
/// the given first-half instants. Instants may touch 0 or 1/2, which lets a
/// square wave be written as {0, 1/2}.
inline HarmonicSpectrum voltage_harmonics(std::span<const double> instants,
                                          double v0, int n_max) {
  if (n_max < 1) throw DomainError("n_max must be at least 1");
  HarmonicSpectrum spec(n_max);
  for (int n = 1; n <= n_max; n += 2) {
    const double vn = 2.0 * v0 / (n * kPi) *
                      detail::alternating_cosine_sum(instants, n);
    spec.amplitude[n] = std::abs(vn);
    spec.phase[n] = vn < 0.0 ? kPi : 0.0;
  }
  return spec;
}

inline HarmonicSpectrum voltage_harmonics(const SwitchingPattern& sp, double v0,
                                          int n_max) {
  return voltage_harmonics(std::span<const double>(sp.instants()), v0, n_max);
}

/// Phase-current spectrum from the line-voltage spectrum. Triplen orders
/// cancel between phases; the rest pass through the load impedance with the
/// +-30 degree line-to-phase shift.
inline HarmonicSpectrum current_harmonics(const HarmonicSpectrum& vspec,
                                          const InverterParams& p) {
  HarmonicSpectrum out(vspec.n_max);
  for (int n = 1; n <= vspec.n_max; n += 2) {
    if (n % 3 == 0) continue;
    out.amplitude[n] = vspec.amplitude[n] / (kSqrt3 * p.impedance(n));
    const double line_to_phase = (n % 6 == 1) ? -kPi / 6.0 : kPi / 6.0;
    out.phase[n] = detail::wrap_phase(vspec.phase[n] + line_to_phase -
                                      std::atan(n * p.omega * p.l / p.r));
  }
  return out;
}

/// sqrt(sum_{n>=2} I_n^2) / I_1.
inline double thd(const HarmonicSpectrum& spec) {
  const double f = spec.fundamental();
  if (!(f > 0.0)) throw UndefinedThdError("THD undefined: zero fundamental");
  double s = 0.0;
  for (int n = 2; n <= spec.n_max; ++n) s += spec.amplitude[n] * spec.amplitude[n];
  return std::sqrt(s) / f;
}

/// Fundamental amplitude of v_ab, (2 V0 / pi) sum (-1)^{j+1} cos(2 pi beta_j).
inline double line_fundamental(const SwitchingPattern& sp, double v0) {
  return 2.0 * v0 / kPi *
         detail::alternating_cosine_sum(std::span<const double>(sp.instants()), 1);
}

/// Complex Fourier coefficient c_n (x = sum c_n e^{i 2 pi n beta}) of an
/// anti-periodic piecewise waveform, integrated exactly segment by segment.
/// Amplitude of the order-n sinusoid is 2|c_n|; even orders vanish.
inline std::complex<double> waveform_harmonic(const PiecewiseWaveform& w, int n) {
  if (n % 2 == 0) return {0.0, 0.0};
  const double om = 2.0 * kPi * n;
  const std::complex<double> iom(0.0, om);
  const std::complex<double> decay(w.alpha(), om);
  std::complex<double> acc = 0.0;
  for (const auto& s : w.segments()) {
    const double h = s.hi - s.lo;
    if (h <= 0.0) continue;
    const std::complex<double> e_lo = std::exp(-iom * s.lo);
    const std::complex<double> e_hi = std::exp(-iom * s.hi);
    acc += s.amplitude * e_lo * (1.0 - std::exp(-decay * h)) / decay;
    acc += s.level * (e_lo - e_hi) / iom;
  }
  // The second half repeats the first with opposite sign; for odd n the
  // kernel also flips, so the halves add.
  return 2.0 * acc;
}

struct TimeDomainThd {
  double thd;
  double i_f;        // fundamental amplitude of i_a [A]
  double e2;         // integral over (0, T/2) of (i_a - i_ref)^2 [A^2 s]
  double e2_scaled;  // same for R i_a in scaled time [V^2]
};

/// THD from the closed-form residual energy and the exact fundamental,
/// through E_2 = [(I_f - I_m)^2 + I_f^2 THD^2] T/4.
inline TimeDomainThd thd_timedomain(const PhaseResponse& resp) {
  const InverterParams& p = resp.params();
  const double e2s = residual_energy(resp);
  // Signed: a fundamental in antiphase with the reference adds to E_2.
  const double i_f_signed =
      line_fundamental(resp.pattern(), p.v0) / (kSqrt3 * p.impedance(1));
  const double i_f = std::abs(i_f_signed);
  if (!(i_f > 0.0)) throw UndefinedThdError("THD undefined: zero fundamental");
  const double e2 = e2s * p.period / (p.r * p.r);
  const double mismatch = i_f_signed - p.i_m;
  const double harmonic_power =
      std::max(0.0, 4.0 * e2 / p.period - mismatch * mismatch);
  return {std::sqrt(harmonic_power) / i_f, i_f, e2, e2s};
}

inline TimeDomainThd thd_timedomain(const SwitchingPattern& sp,
                                    const InverterParams& p) {
  return thd_timedomain(PhaseResponse(sp, p));
}

struct ConvergedSpectrum {
  HarmonicSpectrum current;
  double tail_fraction;  // unresolved share of the harmonic energy
};

/// Current spectrum extended (doubling n_max) until the harmonic energy it
/// misses, measured against the closed-form total, is below rel_tail.
inline ConvergedSpectrum converged_current_spectrum(const SwitchingPattern& sp,
                                                    const InverterParams& p,
                                                    double rel_tail = 1e-10,
                                                    int n_start = 0,
                                                    int n_cap = 1 << 22) {
  const TimeDomainThd td = thd_timedomain(sp, p);
  const double total = td.thd * td.thd * td.i_f * td.i_f;
  int n = n_start > 0 ? n_start : default_harmonic_order(sp.pulses());
  for (;;) {
    HarmonicSpectrum cur = current_harmonics(voltage_harmonics(sp, p.v0, n), p);
    double partial = 0.0;
    for (int k = 2; k <= n; ++k) partial += cur.amplitude[k] * cur.amplitude[k];
    const double tail = total > 0.0 ? std::abs(total - partial) / total : 0.0;
    if (tail < rel_tail || n >= n_cap) return {std::move(cur), tail};
    n *= 2;
  }
}

}  // namespace tdpwm

#endif  // TDPWM_SPECTRUM_HPP
