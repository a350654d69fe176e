#include <gtest/gtest.h>

#include "lsp/instruments.hpp"

using namespace lsp;

TEST(Schedule, QuarterlyInArrears) {
  SwapSpec s;
  s.fixed_rate = 0.02;
  const Portfolio p = schedule(s);
  ASSERT_EQ(p.size(), 20u);
  EXPECT_DOUBLE_EQ(p.front().reset_time, 0.0);
  EXPECT_DOUBLE_EQ(p.front().pay_time, 0.25);
  EXPECT_DOUBLE_EQ(p.back().reset_time, 4.75);
  EXPECT_DOUBLE_EQ(last_payment_time(p), 5.0);
  for (const auto& e : p) {
    EXPECT_EQ(e.kind, FlowKind::SwapNet);
    EXPECT_DOUBLE_EQ(e.strike, 0.02);
  }
}

TEST(Schedule, RejectsFractionalPeriods) {
  SwapSpec s;
  s.tenor = 5.1;
  EXPECT_THROW(schedule(s), std::invalid_argument);
  s.tenor = 5;
  s.daycount_fraction = 0.0;
  EXPECT_THROW(schedule(s), std::invalid_argument);
}

TEST(CashflowEvent, PayoffsBySign) {
  CashflowEvent e;
  e.strike = 0.02;
  e.notional = 100;
  EXPECT_NEAR(e.amount(0.03), 100 * 0.25 * 0.01, 1e-12);
  e.sign = -1;
  EXPECT_NEAR(e.amount(0.03), -100 * 0.25 * 0.01, 1e-12);
  e.sign = 1;
  e.kind = FlowKind::CapletPositivePart;
  EXPECT_EQ(e.amount(0.01), 0.0);
  e.kind = FlowKind::FloorletNegativePart;
  EXPECT_NEAR(e.amount(0.01), -100 * 0.25 * 0.01, 1e-12);
  EXPECT_EQ(e.amount(0.03), 0.0);
  e.kind = FlowKind::Fixed;
  EXPECT_DOUBLE_EQ(e.amount(123.0), 100.0);
}

// The cap and floor legs add back to the swap payment for any fixing, and
// each leg keeps a single sign.
TEST(CapFloorLegs, SumToSwapPayoff) {
  for (Direction d : {Direction::Payer, Direction::Receiver}) {
    SwapSpec s;
    s.fixed_rate = 0.017;
    s.notional = 3.0;
    s.direction = d;
    const Portfolio swap = schedule(s);
    const SignedLegs legs = cap_floor_legs(s);
    ASSERT_EQ(legs.asset.size(), swap.size());
    for (double fix : {-0.01, 0.0, 0.005, 0.017, 0.03, 0.2}) {
      for (std::size_t i = 0; i < swap.size(); ++i) {
        const double a = legs.asset[i].amount(fix);
        const double l = legs.liability[i].amount(fix);
        EXPECT_GE(a, 0.0);
        EXPECT_LE(l, 0.0);
        EXPECT_NEAR(a + l, swap[i].amount(fix), 1e-15);
        EXPECT_NEAR(swap[i].amount(fix), payment(s, fix), 1e-15);
      }
    }
  }
}

TEST(OffsettingPair, NetsToZeroFlows) {
  const Portfolio p = offsetting_pair(4.95, 5.0);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ(p[0].amount(0) + p[1].amount(0), 0.0);
  EXPECT_THROW(offsetting_pair(0.0, 1.0), std::invalid_argument);
}

TEST(Portfolio, ScaledAndConcat) {
  SwapSpec s;
  const Portfolio p = scaled(schedule(s), 2.5);
  EXPECT_DOUBLE_EQ(p[3].notional, 2.5);
  EXPECT_EQ(concat(p, cap(s, 0.01)).size(), 40u);
}
