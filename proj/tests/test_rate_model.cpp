#include <gtest/gtest.h>

#include <cmath>

#include "lsp/rate_model.hpp"

using namespace lsp;

TEST(MixedVol, PiecewiseShape) {
  const double s = 0.0252;
  EXPECT_EQ(mixed_vol(-0.01, s), 0.0);
  EXPECT_EQ(mixed_vol(0.0, s), 0.0);
  EXPECT_NEAR(mixed_vol(0.0075, s), 0.5 * s, 1e-15);
  EXPECT_DOUBLE_EQ(mixed_vol(0.03, s), s);
  EXPECT_NEAR(mixed_vol(0.12, s), 2.0 * s, 1e-15);
  // continuous at both breaks
  EXPECT_NEAR(mixed_vol(kMixedLowerBreak - 1e-12, s), mixed_vol(kMixedLowerBreak, s), 1e-9);
  EXPECT_NEAR(mixed_vol(kMixedUpperBreak - 1e-12, s), mixed_vol(kMixedUpperBreak, s), 1e-9);
}

TEST(ShortRateModel, MixedDriftAndState) {
  const auto m = ShortRateModel::mixed({});
  EXPECT_EQ(m.kind(), ModelKind::Mixed);
  EXPECT_DOUBLE_EQ(m.to_rate(0.02), 0.02);
  EXPECT_DOUBLE_EQ(m.state0(), 0.0018);
  EXPECT_NEAR(m.drift(0.01), 0.21 * (0.044 - 0.01), 1e-15);
  EXPECT_DOUBLE_EQ(m.volatility(0.03), 0.0252);
}

TEST(ShortRateModel, BkWorksInLogRate) {
  const auto m = ShortRateModel::black_karasinski({});
  EXPECT_NEAR(m.state0(), std::log(0.0025), 1e-15);
  EXPECT_NEAR(m.to_rate(m.to_state(0.037)), 0.037, 1e-15);
  EXPECT_NEAR(m.level(), std::log(0.044), 1e-15);
  EXPECT_NEAR(m.drift(m.level()), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(m.volatility(-3.0), 0.8273);
  EXPECT_NEAR(m.stationary_std(), 0.8273 / std::sqrt(2 * 0.2809), 1e-12);
}

TEST(ShortRateModel, RejectsBadParameters) {
  EXPECT_THROW(ShortRateModel::mixed({.a = 0.0}), std::invalid_argument);
  EXPECT_THROW(ShortRateModel::mixed({.rho0 = -0.01}), std::invalid_argument);
  BkParams p;
  p.sigma = 0.0;
  EXPECT_THROW(ShortRateModel::black_karasinski(p), std::invalid_argument);
  p = {};
  p.rho0 = 0.0;
  EXPECT_THROW(ShortRateModel::black_karasinski(p), std::invalid_argument);
}

TEST(CurveSet, SpreadsStackOnLibor) {
  CurveSet c;
  c.libor_ois_spread = 0.0013;
  c.b_cds = bp(75);
  c.b_basis = bp(50);
  c.c_cds = bp(200);
  c.c_basis = bp(50);
  const double r = 0.01;
  EXPECT_NEAR(c.ois(r), 0.0087, 1e-15);
  EXPECT_NEAR(c.b_full(r), 0.0225, 1e-15);
  EXPECT_NEAR(c.c_full(r), 0.035, 1e-15);
  EXPECT_NEAR(c.b_default(r), 0.0175, 1e-15);
  EXPECT_NEAR(c.c_default(r), 0.03, 1e-15);
}

TEST(CurveSet, RiskFreeSetDiscountsEverythingAtOis) {
  const CurveSet c = CurveSet::risk_free();
  for (auto role : kDecompositionChain) {
    const RatePair f = curve_rates(c, 0.02, role);
    EXPECT_NEAR(f.b, c.ois(0.02), 1e-15) << role.name();
    EXPECT_NEAR(f.c, c.ois(0.02), 1e-15) << role.name();
  }
}

TEST(DiscountRole, ChainStartsRiskFreeEndsFull) {
  EXPECT_TRUE(kDecompositionChain.front() == DiscountRole::risk_free());
  EXPECT_TRUE(kDecompositionChain.back() == DiscountRole::full());
}

TEST(Libor, FromZeroCouponBond) {
  EXPECT_NEAR(libor_from_zcb(1.0 / (1.0 + 0.25 * 0.04), 0.25), 0.04, 1e-14);
  EXPECT_DOUBLE_EQ(bp(125), 0.0125);
}
