#ifndef TDPWM_RESPONSE_HPP
#define TDPWM_RESPONSE_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdpwm/errors.hpp"
#include "tdpwm/params.hpp"
#include "tdpwm/pattern.hpp"

// Closed-form steady state of the scaled RL response
//
//   (1/alpha) dv/dbeta + v = u(beta),   v(beta + 1/2) = -v(beta),
//
// where u is piecewise constant on (0, 1/2). On every segment
// [lo, hi) with constant drive `level` the solution is
//
//   v(beta) = level + amplitude * exp(-alpha * (beta - lo)),
//
// so all stored exponentials are evaluated with non-positive arguments. The
// textbook coefficients B_j of exp(-alpha*beta) are recovered on demand and
// only those can overflow.

namespace tdpwm {

class PiecewiseWaveform {
 public:
  struct Segment {
    double lo;
    double hi;
    double amplitude;  // v(lo) - level
    double level;
  };

  PiecewiseWaveform() = default;
  PiecewiseWaveform(double alpha, std::vector<Segment> segments)
      : alpha_(alpha), segments_(std::move(segments)) {
    uppers_.reserve(segments_.size());
    for (const Segment& s : segments_) uppers_.push_back(s.hi);
  }

  double alpha() const { return alpha_; }
  const std::vector<Segment>& segments() const { return segments_; }

  /// Value on [0, 1) with anti-periodic extension past 1/2. Continuous, so
  /// the segment chosen at a breakpoint does not matter.
  double operator()(double beta) const {
    double x = detail::wrap_unit(beta);
    double sign = 1.0;
    if (x >= 0.5) {
      x -= 0.5;
      sign = -1.0;
    }
    if (segments_.empty()) return 0.0;
    auto it = std::upper_bound(uppers_.begin(), uppers_.end(), x);
    std::size_t k = std::min<std::size_t>(it - uppers_.begin(),
                                          segments_.size() - 1);
    const Segment& s = segments_[k];
    return sign * (s.level + s.amplitude * std::exp(-alpha_ * (x - s.lo)));
  }

  /// Value at the start of segment k.
  double start_value(std::size_t k) const {
    return segments_[k].level + segments_[k].amplitude;
  }

 private:
  double alpha_ = 0.0;
  std::vector<Segment> segments_;
  std::vector<double> uppers_;
};

/// Anti-periodic solution for drive levels[k] on (breaks[k-1], breaks[k]),
/// with breaks[-1] = 0 and breaks[n] = 1/2 implied.
inline PiecewiseWaveform solve_antiperiodic(std::span<const double> breaks,
                                            std::span<const double> levels,
                                            double alpha) {
  if (levels.size() != breaks.size() + 1) {
    throw PatternError("need one drive level per segment");
  }
  const std::size_t n = levels.size();
  std::vector<double> lo(n), hi(n), decay(n);
  for (std::size_t k = 0; k < n; ++k) {
    lo[k] = k == 0 ? 0.0 : breaks[k - 1];
    hi[k] = k + 1 == n ? 0.5 : breaks[k];
    decay[k] = std::exp(-alpha * (hi[k] - lo[k]));
  }
  // End value is exp(-alpha/2) * v(0) + q; anti-periodicity fixes v(0).
  double q = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double h = hi[k] - lo[k];
    q = q * decay[k] - levels[k] * std::expm1(-alpha * h);
  }
  double v = -q / (1.0 + std::exp(-0.5 * alpha));

  std::vector<PiecewiseWaveform::Segment> segs;
  segs.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    segs.push_back({lo[k], hi[k], v - levels[k], levels[k]});
    v = levels[k] + (v - levels[k]) * decay[k];
  }
  return PiecewiseWaveform(alpha, std::move(segs));
}

/// Coefficients of the scaled line response v_R,ab = R * i_ab.
class SegmentCoeffs {
 public:
  SegmentCoeffs(std::vector<double> instants, double alpha, double v0,
                PiecewiseWaveform waveform)
      : instants_(std::move(instants)),
        alpha_(alpha),
        v0_(v0),
        waveform_(std::move(waveform)) {}

  double alpha() const { return alpha_; }
  double v0() const { return v0_; }
  const std::vector<double>& instants() const { return instants_; }
  const PiecewiseWaveform& waveform() const { return waveform_; }

  /// Number of segments, 2N + 1 for a full pattern.
  int size() const { return static_cast<int>(instants_.size()) + 1; }

  /// Exponential part of segment j (1-based) at its left end, B_j e^{-alpha
  /// beta_{j-1}}. Always finite.
  double local(int j) const { return waveform_.segments().at(j - 1).amplitude; }

  /// B_j of v_R,ab = B_j e^{-alpha beta} + level on segment j (1-based).
  /// Grows like e^{alpha/2}; overflows to inf for alpha beyond ~1400.
  double B(int j) const {
    const auto& s = waveform_.segments().at(j - 1);
    return s.amplitude * std::exp(alpha_ * s.lo);
  }

 private:
  std::vector<double> instants_;
  double alpha_;
  double v0_;
  PiecewiseWaveform waveform_;
};

inline void require_increasing_half(std::span<const double> instants) {
  double prev = 0.0;
  for (std::size_t j = 0; j < instants.size(); ++j) {
    if (!(instants[j] > prev)) {
      throw PatternError("instants must increase strictly from 0; violated at "
                         "beta_" + std::to_string(j + 1));
    }
    prev = instants[j];
  }
  if (!instants.empty() && !(prev < 0.5)) {
    throw PatternError("last instant must lie below 1/2");
  }
}

/// Segment coefficients for any strictly increasing instant list on (0, 1/2).
/// Odd segments are driven at 0, even segments at V0.
inline SegmentCoeffs segment_coeffs(std::span<const double> instants,
                                    double alpha, double v0) {
  require_increasing_half(instants);
  std::vector<double> levels(instants.size() + 1);
  for (std::size_t k = 0; k < levels.size(); ++k) {
    levels[k] = (k % 2 == 1) ? v0 : 0.0;
  }
  return SegmentCoeffs({instants.begin(), instants.end()}, alpha, v0,
                       solve_antiperiodic(instants, levels, alpha));
}

inline SegmentCoeffs segment_coeffs(const SwitchingPattern& sp, double alpha,
                                    double v0) {
  return segment_coeffs(std::span<const double>(sp.instants()), alpha, v0);
}

/// Scaled line response v_R,ab(beta) for beta in [0, 1).
inline double eval_vRab(const SegmentCoeffs& coeffs, double beta) {
  return coeffs.waveform()(beta);
}

struct PhaseCurrents {
  double a;
  double b;
  double c;
};

/// Per-phase response of one pattern: v_R,ab and the composed phase voltage
/// v_R,a = R i_a with its exact piecewise-exponential form on (0, 1/2).
class PhaseResponse {
 public:
  PhaseResponse(const SwitchingPattern& sp, const InverterParams& params)
      : pattern_(sp),
        params_(params),
        line_(segment_coeffs(sp, params.alpha, params.v0)) {
    build_phase_waveform();
  }

  const SwitchingPattern& pattern() const { return pattern_; }
  const InverterParams& params() const { return params_; }
  const SegmentCoeffs& line() const { return line_; }
  /// v_R,a as a piecewise waveform; segments tile (0, 1/2).
  const PiecewiseWaveform& phase() const { return phase_; }

  double v_rab(double beta) const { return line_.waveform()(beta); }

  /// (1/3) [v_R,ab(beta) - v_R,ab(beta + 1/3)].
  double v_ra(double beta) const {
    return (v_rab(beta) - v_rab(beta + 1.0 / 3.0)) / 3.0;
  }

  PhaseCurrents currents(double beta) const {
    const double r = params_.r;
    return {v_ra(beta) / r, v_ra(beta - 1.0 / 3.0) / r,
            v_ra(beta - 2.0 / 3.0) / r};
  }

  /// Drive of phase a, (v_ab - v_ca)/3 in volts, on the half-open convention.
  double phase_drive(double beta) const {
    const int ab = line_voltage_value(pattern_, beta, LinePair::kAB);
    const int ca = line_voltage_value(pattern_, beta, LinePair::kCA);
    return params_.v0 * (ab - ca) / 3.0;
  }

 private:
  void build_phase_waveform() {
    std::vector<double> pts{1.0 / 6.0};
    for (double b : pattern_.instants()) {
      pts.push_back(b);
      pts.push_back(b < 1.0 / 3.0 ? b + 1.0 / 6.0 : b - 1.0 / 3.0);
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> breaks;
    for (double p : pts) {
      if (p <= 0.0 || p >= 0.5) continue;
      if (!breaks.empty() && p - breaks.back() < 1e-14) continue;
      breaks.push_back(p);
    }
    std::vector<PiecewiseWaveform::Segment> segs;
    segs.reserve(breaks.size() + 1);
    double lo = 0.0;
    for (std::size_t k = 0; k <= breaks.size(); ++k) {
      const double hi = k < breaks.size() ? breaks[k] : 0.5;
      const double level = phase_drive(0.5 * (lo + hi));
      segs.push_back({lo, hi, v_ra(lo) - level, level});
      lo = hi;
    }
    phase_ = PiecewiseWaveform(params_.alpha, std::move(segs));
  }

  SwitchingPattern pattern_;
  InverterParams params_;
  SegmentCoeffs line_;
  PiecewiseWaveform phase_;
};

inline double eval_vRa(const SwitchingPattern& sp, const InverterParams& params,
                       double beta) {
  return PhaseResponse(sp, params).v_ra(beta);
}

/// Phase currents (i_a, i_b, i_c) in amperes; i_b and i_c are i_a delayed by
/// one and two thirds of the period.
inline PhaseCurrents phase_currents(const SwitchingPattern& sp,
                                    const InverterParams& params, double beta) {
  return PhaseResponse(sp, params).currents(beta);
}

}  // namespace tdpwm

#endif  // TDPWM_RESPONSE_HPP
