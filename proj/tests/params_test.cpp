#include <gtest/gtest.h>

#include <cmath>

#include "tdpwm/params.hpp"

using namespace tdpwm;

TEST(Params, AlphaFromFigureCaptions) {
  EXPECT_NEAR(derive_params(300, 27, 3e-3, 60, 5, 7).alpha, 150.0, 1e-9);
  EXPECT_NEAR(derive_params(300, 27, 1e-3, 60, 5, 7).alpha, 450.0, 1e-9);
}

TEST(Params, DerivedAmplitudeAndPhase) {
  const InverterParams p = derive_params(300, 27, 3e-3, 60, 5, 7);
  const double z = std::sqrt(27.0 * 27.0 + std::pow(2 * M_PI * 60 * 3e-3, 2));
  EXPECT_NEAR(p.v_m, std::sqrt(3.0) * 5.0 * z, 1e-9);
  EXPECT_NEAR(p.v_m, 234.03, 5e-3);
  EXPECT_NEAR(p.phi, 0.04186, 5e-6);
  EXPECT_NEAR(p.phi, std::atan(2 * M_PI / p.alpha), 1e-15);
  EXPECT_DOUBLE_EQ(p.alpha, p.r * p.period / p.l);
  EXPECT_DOUBLE_EQ(p.v_rm(), 27.0 * 5.0);
}

TEST(Params, SwitchingFrequencyFromTable) {
  EXPECT_NEAR(derive_params(300, 27, 5e-3, 60, 5, 5).f_sw, 1800.0, 1e-9);
  EXPECT_NEAR(derive_params(300, 27, 3e-3, 60, 5, 7).f_sw, 2520.0, 1e-9);
  EXPECT_NEAR(derive_params(300, 27, 3e-3, 60, 5, 9).f_sw, 3240.0, 1e-9);
  EXPECT_NEAR(derive_params(300, 27, 2e-3, 60, 5, 11).f_sw, 3960.0, 1e-9);
}

TEST(Params, RejectsBadInputs) {
  EXPECT_THROW(derive_params(0, 27, 3e-3, 60, 5, 7), DomainError);
  EXPECT_THROW(derive_params(300, -1, 3e-3, 60, 5, 7), DomainError);
  EXPECT_THROW(derive_params(300, 27, 0, 60, 5, 7), DomainError);
  EXPECT_THROW(derive_params(300, 27, 3e-3, 0, 5, 7), DomainError);
  EXPECT_THROW(derive_params(300, 27, 3e-3, 60, -5, 7), DomainError);
  EXPECT_THROW(derive_params(300, 27, 3e-3, 60, 5, 6), PatternError);
  EXPECT_THROW(derive_params(300, 27, 3e-3, 60, 5, 0), PatternError);
  // 4 V0 / pi = 381.97 V; I_m = 9 A needs about 421 V.
  EXPECT_THROW(derive_params(300, 27, 3e-3, 60, 9, 7), RangeError);
}

TEST(Params, OvermodulationFlag) {
  EXPECT_FALSE(derive_params(300, 27, 3e-3, 60, 5, 7).overmodulated);
  EXPECT_TRUE(derive_params(300, 27, 3e-3, 60, 7, 7).overmodulated);
}

TEST(Params, ScaledDescriptionRoundTrips) {
  const InverterParams a = derive_params(300, 27, 3e-3, 60, 5, 7);
  const InverterParams b = derive_scaled_params(a.alpha, a.depth(), 300, 13.5, 60, 7);
  EXPECT_NEAR(b.alpha, a.alpha, 1e-12);
  EXPECT_NEAR(b.depth(), a.depth(), 1e-14);
  EXPECT_NEAR(b.l, 1.5e-3, 1e-15);
  EXPECT_NEAR(b.i_m, 10.0, 1e-12);
}
