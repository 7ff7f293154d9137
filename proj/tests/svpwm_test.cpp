#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tdpwm/spectrum.hpp"
#include "tdpwm/svpwm.hpp"

using namespace tdpwm;

namespace {

const std::vector<std::pair<int, double>> kTableRows{
    {5, 5e-3}, {7, 3e-3}, {9, 3e-3}, {11, 2e-3}};

}  // namespace

TEST(Svpwm, SwitchingFrequency) {
  const InverterParams p = derive_params(300, 27, 3e-3, 60, 5, 7);
  EXPECT_NEAR(p.f_sw, 2520.0, 1e-9);
  EXPECT_EQ(static_cast<int>(svpwm_raw_instants({7, 0.7}).size()), 6 * 7);
}

TEST(Svpwm, RawEdgesNearManifold) {
  for (int P : {5, 7, 9, 11}) {
    const ProjectionResult pr = project_to_symmetry(svpwm_raw_instants({P, 0.78}), P);
    EXPECT_LT(pr.displacement, 1e-3) << P;
  }
}

TEST(Svpwm, UncalibratedFundamentalWithinOnePercent) {
  for (auto [P, L] : kTableRows) {
    const InverterParams p = derive_params(300, 27, L, 60, 5, P);
    const SwitchingPattern sp = svpwm_pattern({P, p.depth()}, p);
    EXPECT_NEAR(line_fundamental(sp, p.v0), p.v_m, 0.01 * p.v_m) << P;
  }
}

TEST(Svpwm, CalibratedSeedHitsFundamental) {
  for (auto [P, L] : kTableRows) {
    const InverterParams p = derive_params(300, 27, L, 60, 5, P);
    const SvpwmSeed seed = svpwm_seed(p);
    EXPECT_NEAR(line_fundamental(seed.pattern, p.v0), p.v_m, 1e-12 * p.v_m);
    EXPECT_TRUE(validate_pattern(seed.pattern, 1e-4).valid) << P;
    EXPECT_LE(seed.spec.m_index, 1.0);
  }
}

TEST(Svpwm, OnePulsePerCarrierPeriod) {
  for (int P : {5, 7, 9, 11}) {
    const SwitchingPattern sp = svpwm_pattern({P, 0.8});
    const double ts = 1.0 / (6.0 * P);
    for (int k = 0; k < 3 * P; ++k) {
      int rising = 0, falling = 0;
      for (std::size_t j = 0; j < sp.size(); ++j) {
        if (sp[j] >= k * ts && sp[j] < (k + 1) * ts) (j % 2 == 0 ? rising : falling)++;
      }
      EXPECT_EQ(rising, 1) << "P=" << P << " period " << k;
      EXPECT_EQ(falling, 1) << "P=" << P << " period " << k;
    }
  }
}

TEST(Svpwm, RejectsOutOfRange) {
  EXPECT_THROW(svpwm_raw_instants({5, 0.0}), RangeError);
  EXPECT_THROW(svpwm_raw_instants({5, 1.2}), RangeError);
  EXPECT_THROW(svpwm_raw_instants({6, 0.5}), PatternError);
  EXPECT_THROW(svpwm_raw_instants({5, 0.5, 1.5}), DomainError);
  const InverterParams p = derive_params(300, 27, 3e-3, 60, 5, 7);
  EXPECT_THROW(svpwm_pattern({5, 0.5}, p), PatternError);
  EXPECT_THROW(svpwm_seed(derive_params(300, 27, 3e-3, 60, 6.5, 7)), RangeError);
}

TEST(Projection, OnManifoldIsFixed) {
  const SwitchingPattern sp = svpwm_pattern({7, 0.7});
  const ProjectionResult pr = project_to_symmetry(sp.instants(), 7);
  EXPECT_LE(pr.displacement, 1e-16);
  const SwitchingPattern back = expand_pattern(pr.free);
  for (std::size_t j = 0; j < sp.size(); ++j) EXPECT_NEAR(back[j], sp[j], 1e-16);
}

TEST(Projection, SinglePairViolationSplitsEvenly) {
  // Break beta_2 + beta_10 = 1/6 by eps while keeping the quarter-wave
  // images consistent: beta_2 and beta_29 = 1/2 - beta_2 both move.
  const SwitchingPattern sp = svpwm_pattern({5, 0.7});
  const double eps = 1e-6;
  std::vector<double> raw = sp.instants();
  raw[1] += eps;
  raw[28] -= eps;
  const ProjectionResult pr = project_to_symmetry(raw, 5);
  const SwitchingPattern out = expand_pattern(pr.free);
  EXPECT_NEAR(out[1] - raw[1], -eps / 2, 1e-15);
  EXPECT_NEAR(out[9] - raw[9], -eps / 2, 1e-15);
  EXPECT_NEAR(out[1] + out[9], 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(pr.displacement, eps / 2, 1e-15);
}

TEST(Projection, Errors) {
  EXPECT_THROW(project_to_symmetry(std::vector<double>(29, 0.1), 5), SeedError);
  std::vector<double> raw = svpwm_pattern({5, 0.7}).instants();
  std::swap(raw[3], raw[4]);
  EXPECT_THROW(project_to_symmetry(raw, 5), SeedError);
}

TEST(Jitter, StaysFeasibleAndIsReproducible) {
  const InverterParams p = derive_params(300, 27, 3e-3, 60, 5, 9);
  std::mt19937_64 a(5), b(5);
  for (int k = 0; k < 20; ++k) {
    const FreePattern fa = jittered_svpwm(p, a);
    const FreePattern fb = jittered_svpwm(p, b);
    EXPECT_EQ(fa.theta(), fb.theta());
    EXPECT_TRUE(validate_pattern(expand_pattern(fa), 0.0).valid);
  }
}
