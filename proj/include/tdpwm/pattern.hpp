#ifndef TDPWM_PATTERN_HPP
#define TDPWM_PATTERN_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdpwm/errors.hpp"
#include "tdpwm/params.hpp"

// Switching patterns in scaled time beta = t/T.
//
// A three-phase pattern is described by the rising/falling instants
// beta_1 < ... < beta_{6P} of the line voltage v_ab on (0, 1/2). The
// instants split into three pulse groups of 2P instants each: p+ on (0, 1/6),
// q+ on (1/6, 1/3) and r+ on (1/3, 1/2). Quarter-wave symmetry maps r+ onto
// p+, and KVL together with the single-leg switching rule builds every q+
// pulse from one p+ pulse and one r+ pulse. Within p+ the pulse index l pairs
// instants as
//
//   l odd : beta_{2l}   + beta_{2P-2l+2} = 1/6
//   l even: beta_{2l-1} + beta_{2P-2l+1} = 1/6
//
// With k = l these pair even instants 2k (k odd) with 2(P+1-k), and odd
// instants 2k-1 (k even) with 2(P+1-k)-1. Exactly one of them is paired with
// itself: beta_{P+1} when (P+1)/2 is odd, beta_P when (P+1)/2 is even. It is
// pinned at 1/12.
//
// Free-parameter layout: theta holds beta_j for every p+ index j that is
// neither the pinned instant nor the larger member of a pair, in increasing
// j. That leaves 2P - (P-1)/2 - 1 = (3P-1)/2 parameters.

namespace tdpwm {

/// Number of independent scaled instants for P pulses per group.
constexpr int free_parameter_count(int pulses) { return (3 * pulses - 1) / 2; }

/// beta = offset + sign * theta[free_index]; free_index < 0 means constant.
struct InstantSource {
  int free_index = -1;
  double sign = 0.0;
  double offset = 0.0;
};

enum class RelationFamily {
  kQuarterWaveRising,   // beta_{4P+2l-1} + beta_{2P-2l+2} = 1/2
  kQuarterWaveFalling,  // beta_{4P+2l}   + beta_{2P-2l+1} = 1/2
  kOddRisingShift,      // beta_{2P+2l-1} - beta_{2l-1}    = 1/6   (l odd)
  kOddFallingMirror,    // beta_{2P+2l}   + beta_{2P-2l+1} = 1/3   (l odd)
  kOddPair,             // beta_{2l}      + beta_{2P-2l+2} = 1/6   (l odd)
  kEvenRisingMirror,    // beta_{2P+2l-1} + beta_{2P-2l+2} = 1/3   (l even)
  kEvenFallingShift,    // beta_{2P+2l}   - beta_{2l}      = 1/6   (l even)
  kEvenPair,            // beta_{2l-1}    + beta_{2P-2l+1} = 1/6   (l even)
};

inline const char* to_string(RelationFamily f) {
  switch (f) {
    case RelationFamily::kQuarterWaveRising: return "quarter_wave_rising";
    case RelationFamily::kQuarterWaveFalling: return "quarter_wave_falling";
    case RelationFamily::kOddRisingShift: return "odd_rising_shift";
    case RelationFamily::kOddFallingMirror: return "odd_falling_mirror";
    case RelationFamily::kOddPair: return "odd_pair";
    case RelationFamily::kEvenRisingMirror: return "even_rising_mirror";
    case RelationFamily::kEvenFallingShift: return "even_falling_shift";
    case RelationFamily::kEvenPair: return "even_pair";
  }
  return "unknown";
}

/// One linear relation beta_lhs + sign * beta_rhs = constant (1-based).
struct SymmetryRelation {
  RelationFamily family;
  int pulse;  // l
  int lhs;
  int rhs;
  double sign;
  double constant;

  double residual(std::span<const double> beta) const {
    return std::abs(beta[lhs - 1] + sign * beta[rhs - 1] - constant);
  }
};

/// Index bookkeeping for the symmetry manifold of one pulse count.
class SymmetryLayout {
 public:
  explicit SymmetryLayout(int pulses) : pulses_(pulses) {
    require_odd_pulses(pulses);
    const int P = pulses;
    sources_.resize(6 * P);

    std::vector<bool> dependent(2 * P + 1, false);
    for (int k = 1; k <= P; ++k) {
      const int a = (k % 2 == 1) ? 2 * k : 2 * k - 1;
      const int b = (k % 2 == 1) ? 2 * (P + 1 - k) : 2 * (P + 1 - k) - 1;
      if (a == b) {
        fixed_instant_ = a;
        dependent[a] = true;
      } else if (a < b) {
        pairs_.emplace_back(a, b);
        dependent[b] = true;
      }
    }
    for (int j = 1; j <= 2 * P; ++j) {
      if (!dependent[j]) {
        src(j) = {static_cast<int>(free_instants_.size()), 1.0, 0.0};
        free_instants_.push_back(j);
      }
    }
    src(fixed_instant_) = {-1, 0.0, 1.0 / 12.0};
    for (auto [a, b] : pairs_) src(b) = reflect(src(a), 1.0 / 6.0);

    for (int l = 1; l <= P; ++l) {
      src(4 * P + 2 * l - 1) = reflect(src(2 * P - 2 * l + 2), 0.5);
      src(4 * P + 2 * l) = reflect(src(2 * P - 2 * l + 1), 0.5);
      if (l % 2 == 1) {
        src(2 * P + 2 * l - 1) = shift(src(2 * l - 1), 1.0 / 6.0);
        src(2 * P + 2 * l) = reflect(src(2 * P - 2 * l + 1), 1.0 / 3.0);
      } else {
        src(2 * P + 2 * l - 1) = reflect(src(2 * P - 2 * l + 2), 1.0 / 3.0);
        src(2 * P + 2 * l) = shift(src(2 * l), 1.0 / 6.0);
      }
    }

    using F = RelationFamily;
    for (int l = 1; l <= P; ++l) {
      relations_.push_back({F::kQuarterWaveRising, l, 4 * P + 2 * l - 1,
                            2 * P - 2 * l + 2, 1.0, 0.5});
      relations_.push_back({F::kQuarterWaveFalling, l, 4 * P + 2 * l,
                            2 * P - 2 * l + 1, 1.0, 0.5});
      if (l % 2 == 1) {
        relations_.push_back(
            {F::kOddRisingShift, l, 2 * P + 2 * l - 1, 2 * l - 1, -1.0, 1.0 / 6.0});
        relations_.push_back({F::kOddFallingMirror, l, 2 * P + 2 * l,
                              2 * P - 2 * l + 1, 1.0, 1.0 / 3.0});
        relations_.push_back(
            {F::kOddPair, l, 2 * l, 2 * P - 2 * l + 2, 1.0, 1.0 / 6.0});
      } else {
        relations_.push_back({F::kEvenRisingMirror, l, 2 * P + 2 * l - 1,
                              2 * P - 2 * l + 2, 1.0, 1.0 / 3.0});
        relations_.push_back(
            {F::kEvenFallingShift, l, 2 * P + 2 * l, 2 * l, -1.0, 1.0 / 6.0});
        relations_.push_back(
            {F::kEvenPair, l, 2 * l - 1, 2 * P - 2 * l + 1, 1.0, 1.0 / 6.0});
      }
    }
  }

  int pulses() const { return pulses_; }
  int free_count() const { return static_cast<int>(free_instants_.size()); }
  int instant_count() const { return 6 * pulses_; }

  /// 1-based p+ indices that carry the free parameters, increasing.
  const std::vector<int>& free_instants() const { return free_instants_; }
  /// 1-based index of the self-paired p+ instant (value 1/12).
  int fixed_instant() const { return fixed_instant_; }
  /// Mutually related p+ instants (smaller index first).
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  const std::vector<SymmetryRelation>& relations() const { return relations_; }

  /// How beta_j (1-based) depends on theta.
  const InstantSource& source(int j) const { return sources_.at(j - 1); }
  const std::vector<InstantSource>& sources() const { return sources_; }

  std::vector<double> expand(std::span<const double> theta) const {
    std::vector<double> beta(sources_.size());
    for (std::size_t j = 0; j < sources_.size(); ++j) {
      const InstantSource& s = sources_[j];
      beta[j] = s.free_index < 0 ? s.offset
                                 : s.offset + s.sign * theta[s.free_index];
    }
    return beta;
  }

  /// Pulls d/dbeta back to d/dtheta through the affine expansion.
  std::vector<double> pullback(std::span<const double> d_beta) const {
    std::vector<double> d_theta(free_instants_.size(), 0.0);
    for (std::size_t j = 0; j < sources_.size(); ++j) {
      const InstantSource& s = sources_[j];
      if (s.free_index >= 0) d_theta[s.free_index] += s.sign * d_beta[j];
    }
    return d_theta;
  }

 private:
  InstantSource& src(int j) { return sources_[j - 1]; }

  static InstantSource reflect(const InstantSource& s, double c) {
    return {s.free_index, -s.sign, c - s.offset};
  }
  static InstantSource shift(const InstantSource& s, double c) {
    return {s.free_index, s.sign, s.offset + c};
  }

  int pulses_;
  int fixed_instant_ = 0;
  std::vector<int> free_instants_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<InstantSource> sources_;
  std::vector<SymmetryRelation> relations_;
};

/// Independent scaled instants theta of a symmetric pattern.
class FreePattern {
 public:
  FreePattern(int pulses, std::vector<double> theta)
      : pulses_(pulses), theta_(std::move(theta)) {
    require_odd_pulses(pulses);
    if (static_cast<int>(theta_.size()) != free_parameter_count(pulses)) {
      throw PatternError("expected " +
                         std::to_string(free_parameter_count(pulses)) +
                         " free instants for P = " + std::to_string(pulses) +
                         ", got " + std::to_string(theta_.size()));
    }
    for (double t : theta_) {
      if (!(t > 0.0 && t < 0.5)) {
        throw PatternError("free instant outside (0, 1/2): " +
                           std::to_string(t));
      }
    }
  }

  int pulses() const { return pulses_; }
  const std::vector<double>& theta() const { return theta_; }
  std::size_t size() const { return theta_.size(); }

 private:
  int pulses_;
  std::vector<double> theta_;
};

/// Full list beta_1..beta_{6P}; beta_0 = 0 and beta_{6P+1} = 1/2 are implied.
/// Construction checks the count only, so that invalid patterns can still be
/// diagnosed by validate_pattern().
class SwitchingPattern {
 public:
  SwitchingPattern(int pulses, std::vector<double> instants)
      : pulses_(pulses), instants_(std::move(instants)) {
    require_odd_pulses(pulses);
    if (static_cast<int>(instants_.size()) != 6 * pulses) {
      throw PatternError("expected 6P = " + std::to_string(6 * pulses) +
                         " instants, got " + std::to_string(instants_.size()));
    }
  }

  int pulses() const { return pulses_; }
  /// Pulses of v_ab per half period, N = 3P.
  int half_period_pulses() const { return 3 * pulses_; }
  const std::vector<double>& instants() const { return instants_; }
  double operator[](std::size_t j) const { return instants_[j]; }
  std::size_t size() const { return instants_.size(); }

 private:
  int pulses_;
  std::vector<double> instants_;
};

/// Gaps beta_{j+1} - beta_j for j = 0..n including both implied endpoints.
inline std::vector<double> instant_gaps(std::span<const double> beta) {
  std::vector<double> gaps(beta.size() + 1);
  double prev = 0.0;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    gaps[j] = beta[j] - prev;
    prev = beta[j];
  }
  gaps.back() = 0.5 - prev;
  return gaps;
}

inline SwitchingPattern expand_pattern(const FreePattern& fp,
                                       const SymmetryLayout& layout) {
  std::vector<double> beta = layout.expand(fp.theta());
  const std::vector<double> gaps = instant_gaps(beta);
  for (std::size_t j = 0; j < gaps.size(); ++j) {
    if (!(gaps[j] > 0.0)) {
      throw InfeasibleError(
          "free parameters expand to a non-increasing pattern at gap " +
              std::to_string(j) + " (beta_" + std::to_string(j + 1) +
              " - beta_" + std::to_string(j) + " = " +
              std::to_string(gaps[j]) + ")",
          static_cast<int>(j));
    }
  }
  return SwitchingPattern(fp.pulses(), std::move(beta));
}

inline SwitchingPattern expand_pattern(const FreePattern& fp) {
  return expand_pattern(fp, SymmetryLayout(fp.pulses()));
}

/// Reads the free parameters back out of a full pattern.
inline FreePattern extract_free(const SwitchingPattern& sp) {
  SymmetryLayout layout(sp.pulses());
  std::vector<double> theta;
  theta.reserve(layout.free_instants().size());
  for (int j : layout.free_instants()) theta.push_back(sp[j - 1]);
  return FreePattern(sp.pulses(), std::move(theta));
}

enum class LinePair { kAB, kBC, kCA };

namespace detail {

/// Wraps into [0, 1).
inline double wrap_unit(double beta) {
  double w = beta - std::floor(beta);
  return w >= 1.0 ? 0.0 : w;
}

/// v_ab / V0 from the first-half instants; half-open [rise, fall) intervals.
inline int line_level_ab(std::span<const double> beta_half, double beta) {
  double x = wrap_unit(beta);
  int sign = 1;
  if (x >= 0.5) {
    x -= 0.5;
    sign = -1;
  }
  const auto count = std::upper_bound(beta_half.begin(), beta_half.end(), x) -
                     beta_half.begin();
  return (count % 2 == 1) ? sign : 0;
}

}  // namespace detail

/// Line voltage in units of V0 (-1, 0 or +1). v_bc and v_ca are v_ab delayed
/// and advanced by a third of the period.
inline int line_voltage_value(const SwitchingPattern& sp, double beta,
                              LinePair pair) {
  const std::span<const double> inst(sp.instants());
  switch (pair) {
    case LinePair::kAB: return detail::line_level_ab(inst, beta);
    case LinePair::kBC: return detail::line_level_ab(inst, beta - 1.0 / 3.0);
    case LinePair::kCA: return detail::line_level_ab(inst, beta + 1.0 / 3.0);
  }
  return 0;
}

struct RelationResidual {
  RelationFamily family;
  int pulse;
  int lhs;
  int rhs;
  double residual;
};

struct PatternDiagnostics {
  bool monotonic = false;
  double min_gap = 0.0;
  int min_gap_index = -1;
  std::vector<RelationResidual> symmetry_residuals;
  bool kvl_ok = false;
  bool valid = false;

  double max_symmetry_residual() const {
    double m = 0.0;
    for (const auto& r : symmetry_residuals) m = std::max(m, r.residual);
    return m;
  }
};

inline constexpr double kSymmetryTolerance = 1e-12;

/// Checks the three line voltages sum to zero on every interval between
/// switching events over a full period.
inline bool check_kvl(const SwitchingPattern& sp) {
  std::vector<double> events{0.0, 1.0};
  for (double b : sp.instants()) {
    for (double base : {b, b + 0.5}) {
      for (double s : {0.0, 1.0 / 3.0, 2.0 / 3.0}) {
        events.push_back(detail::wrap_unit(base + s));
      }
    }
  }
  std::sort(events.begin(), events.end());
  for (std::size_t k = 0; k + 1 < events.size(); ++k) {
    if (events[k + 1] - events[k] < 1e-13) continue;
    const double mid = 0.5 * (events[k] + events[k + 1]);
    const int sum = line_voltage_value(sp, mid, LinePair::kAB) +
                    line_voltage_value(sp, mid, LinePair::kBC) +
                    line_voltage_value(sp, mid, LinePair::kCA);
    if (sum != 0) return false;
  }
  return true;
}

inline PatternDiagnostics validate_pattern(const SwitchingPattern& sp,
                                           double tau) {
  PatternDiagnostics d;
  const std::vector<double> gaps = instant_gaps(sp.instants());
  d.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < gaps.size(); ++j) {
    if (gaps[j] < d.min_gap) {
      d.min_gap = gaps[j];
      d.min_gap_index = static_cast<int>(j);
    }
  }
  d.monotonic = std::all_of(gaps.begin(), gaps.end(),
                            [](double g) { return g > 0.0; });

  SymmetryLayout layout(sp.pulses());
  for (const SymmetryRelation& rel : layout.relations()) {
    d.symmetry_residuals.push_back(
        {rel.family, rel.pulse, rel.lhs, rel.rhs, rel.residual(sp.instants())});
  }
  d.kvl_ok = d.monotonic && check_kvl(sp);
  d.valid = d.monotonic && d.min_gap >= tau &&
            d.max_symmetry_residual() <= kSymmetryTolerance && d.kvl_ok;
  return d;
}

}  // namespace tdpwm

#endif  // TDPWM_PATTERN_HPP
