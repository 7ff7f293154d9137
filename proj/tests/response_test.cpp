#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "tdpwm/response.hpp"
#include "tdpwm/spectrum.hpp"
#include "tdpwm/svpwm.hpp"

using namespace tdpwm;

namespace {

// RK4 on dv/dbeta = alpha (level - v), each segment split into equal steps.
std::vector<double> rk4_steady_state(const std::vector<double>& beta, double alpha,
                                     double v0, double h_max) {
  std::vector<double> breaks{0.0};
  breaks.insert(breaks.end(), beta.begin(), beta.end());
  breaks.push_back(0.5);
  double v = 0.0;
  std::vector<double> at_breaks;
  for (int half = 0; half < 6; ++half) {
    const double sign = (half % 2 == 0) ? 1.0 : -1.0;
    at_breaks.assign(1, v);
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      const double level = sign * ((k % 2 == 1) ? v0 : 0.0);
      const double len = breaks[k + 1] - breaks[k];
      const int steps = static_cast<int>(std::ceil(len / h_max));
      const double h = len / steps;
      auto rhs = [&](double x) { return alpha * (level - x); };
      for (int s = 0; s < steps; ++s) {
        const double k1 = rhs(v), k2 = rhs(v + 0.5 * h * k1);
        const double k3 = rhs(v + 0.5 * h * k2), k4 = rhs(v + h * k3);
        v += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      }
      at_breaks.push_back(v);
    }
  }
  // Last pass ran on the negative half; flip to the positive one.
  for (double& x : at_breaks) x = -x;
  return at_breaks;
}

}  // namespace

TEST(SegmentCoeffs, EmptyPatternHasZeroResponse) {
  const SegmentCoeffs c = segment_coeffs(std::vector<double>{}, 150.0, 300.0);
  EXPECT_EQ(c.size(), 1);
  EXPECT_EQ(c.B(1), 0.0);
  for (double b : {0.0, 0.1, 0.3, 0.7}) EXPECT_EQ(eval_vRab(c, b), 0.0);
}

TEST(SegmentCoeffs, BoundaryIdentity) {
  std::mt19937_64 rng(11);
  for (double alpha : {90.0, 150.0, 450.0}) {
    const SwitchingPattern sp = expand_pattern(ref::random_pattern(7, alpha, rng));
    const SegmentCoeffs c = segment_coeffs(sp, alpha, 300.0);
    const double last = c.B(c.size());
    EXPECT_NEAR(c.B(1) + last * std::exp(-alpha / 2), 0.0, 1e-12 * std::abs(c.B(1)));
  }
}

TEST(SegmentCoeffs, MatchTextbookCoefficients) {
  std::mt19937_64 rng(12);
  for (double alpha : {20.0, 90.0, 150.0}) {
    for (int P : {5, 9}) {
      const SwitchingPattern sp = expand_pattern(ref::random_pattern(P, alpha, rng));
      const SegmentCoeffs c = segment_coeffs(sp, alpha, 300.0);
      const std::vector<double> b = ref::direct_b(sp.instants(), alpha, 300.0);
      double scale = 0.0;
      for (double x : b) scale = std::max(scale, std::abs(x));
      ASSERT_EQ(static_cast<int>(b.size()), c.size());
      for (int j = 1; j <= c.size(); ++j) {
        EXPECT_NEAR(c.B(j), b[j - 1], 1e-12 * scale) << "alpha=" << alpha << " j=" << j;
      }
      for (int k = 0; k < 500; ++k) {
        const double x = (k + 0.5) / 1000.0;
        EXPECT_NEAR(eval_vRab(c, x), ref::direct_vrab(b, sp.instants(), alpha, 300.0, x),
                    1e-10 * 300.0);
      }
    }
  }
}

TEST(SegmentCoeffs, TwoInstantPatternMatchesOde) {
  const std::vector<double> beta{0.1, 0.4};
  const SegmentCoeffs c = segment_coeffs(beta, 150.0, 300.0);
  const std::vector<double> ode = rk4_steady_state(beta, 150.0, 300.0, 2e-5);
  const std::vector<double> at{0.0, 0.1, 0.4, 0.5};
  for (std::size_t k = 0; k < at.size(); ++k) {
    const double closed = k + 1 < at.size() ? eval_vRab(c, at[k]) : -eval_vRab(c, 0.0);
    EXPECT_NEAR(closed, ode[k], 1e-8 * 300.0) << at[k];
  }
}

TEST(SegmentCoeffs, AntiPeriodicAndContinuous) {
  std::mt19937_64 rng(13);
  const SwitchingPattern sp = expand_pattern(ref::random_pattern(5, 150.0, rng));
  const SegmentCoeffs c = segment_coeffs(sp, 150.0, 300.0);
  for (int k = 0; k < 1000; ++k) {
    const double x = k / 2000.0 + 1e-4;
    EXPECT_NEAR(eval_vRab(c, x + 0.5), -eval_vRab(c, x), 1e-12 * 300.0);
  }
  const double eps = 1e-12;
  for (double b : sp.instants()) {
    EXPECT_NEAR(eval_vRab(c, b - eps), eval_vRab(c, b), 2.0 * 150.0 * 300.0 * eps);
  }
  EXPECT_NEAR(eval_vRab(c, 0.5 - 1e-15), -eval_vRab(c, 0.0), 1e-12 * 300.0);
}

TEST(SegmentCoeffs, FiniteAtLargeAlpha) {
  std::mt19937_64 rng(14);
  for (double alpha : {2000.0, 1e4}) {
    const SwitchingPattern sp = expand_pattern(ref::random_pattern(11, 450.0, rng));
    const SegmentCoeffs c = segment_coeffs(sp, alpha, 300.0);
    for (int k = 0; k < 2000; ++k) {
      const double v = eval_vRab(c, k / 2000.0);
      ASSERT_TRUE(std::isfinite(v));
      EXPECT_LE(std::abs(v), 300.0 * (1 + 1e-12));
    }
  }
}

TEST(SegmentCoeffs, RejectsNonMonotone) {
  EXPECT_THROW(segment_coeffs(std::vector<double>{0.2, 0.1}, 150.0, 300.0), PatternError);
  EXPECT_THROW(segment_coeffs(std::vector<double>{0.1, 0.5}, 150.0, 300.0), PatternError);
}

TEST(PhaseResponse, ComposedFromLineVoltages) {
  std::mt19937_64 rng(15);
  const InverterParams p = ref::scaled_params(150.0, 0.78, 7);
  const SwitchingPattern sp = expand_pattern(ref::random_pattern(7, 150.0, rng));
  const PhaseResponse resp(sp, p);
  const SegmentCoeffs line = segment_coeffs(sp, p.alpha, p.v0);
  for (int k = 0; k < 2000; ++k) {
    const double x = (k + 0.3) / 2000.0;
    const double expected = (eval_vRab(line, x) - eval_vRab(line, x + 1.0 / 3.0)) / 3.0;
    EXPECT_NEAR(resp.v_ra(x), expected, 1e-11 * p.v0);
    EXPECT_NEAR(resp.v_ra(x + 0.5), -resp.v_ra(x), 1e-11 * p.v0);
  }
}

TEST(PhaseResponse, CurrentsSumToZero) {
  std::mt19937_64 rng(16);
  const InverterParams p = ref::scaled_params(90.0, 0.6, 5);
  const SwitchingPattern sp = expand_pattern(ref::random_pattern(5, 90.0, rng));
  const PhaseResponse resp(sp, p);
  double peak = 0.0;
  for (int k = 0; k < 10000; ++k) peak = std::max(peak, std::abs(resp.currents(k / 1e4).a));
  for (int k = 0; k < 10000; ++k) {
    const PhaseCurrents i = resp.currents(k / 1e4);
    EXPECT_LE(std::abs(i.a + i.b + i.c), 1e-12 * peak);
    EXPECT_NEAR(i.b, resp.currents(k / 1e4 - 1.0 / 3.0).a, 1e-12 * peak);
  }
}

TEST(PhaseResponse, FundamentalMatchesReferenceWhenPinned) {
  for (int P : {5, 7, 9, 11}) {
    const InverterParams p = derive_params(300, 27, 3e-3, 60, 5, P);
    const SvpwmSeed seed = svpwm_seed(p);
    const PhaseResponse resp(seed.pattern, p);
    const double amp = 2.0 * std::abs(waveform_harmonic(resp.phase(), 1));
    EXPECT_NEAR(amp, p.v_rm(), 1e-9 * p.v_rm()) << P;
    EXPECT_NEAR(amp, p.v_m / (std::sqrt(3.0) * std::sqrt(1 + 4 * M_PI * M_PI / (p.alpha * p.alpha))),
                1e-9 * p.v_rm());
  }
}
