#include <gtest/gtest.h>

#include <cmath>

#include "lsp/analytics.hpp"

using namespace lsp;

namespace {

FdSettings coarse() {
  FdSettings s;
  s.nodes = 301;
  s.dt = 0.025;
  return s;
}

}  // namespace

TEST(YieldValue, Scaling) {
  EXPECT_DOUBLE_EQ(yield_value(0.001, 2.0, 5.0), 1.0);
  EXPECT_THROW(yield_value(1.0, 1.0, 0.0), std::domain_error);
}

TEST(ParRate, RiskFreeRootMatchesClosedForm) {
  const FdEngine fd(ShortRateModel::mixed({}));
  SwapSpec s;
  const double a = annuity(fd, s);
  const double par = risk_free_par(fd, s);
  const double k = par_rate(fd_pricer(fd, CurveSet{}, DiscountRole::risk_free()), s, a, 0.03);
  EXPECT_NEAR(k, par, 1e-8);
  EXPECT_GT(par, 0.01);
  EXPECT_LT(par, 0.03);
}

TEST(BidAsk, CollapsesWithoutCredit) {
  const FdEngine fd(ShortRateModel::mixed({}));
  SwapSpec s;
  CurveSet c;
  c.c_cds = bp(250);
  const BidAsk q = fd_bid_ask(fd, c, s, DiscountRole::risk_free());
  EXPECT_NEAR(q.spread_bp(), 0.0, 1e-4);
  const BidAsk w = fd_bid_ask(fd, c, s);
  EXPECT_LT(w.bid, w.ask);
}

TEST(HedgeRatio, UnitWithoutCredit) {
  const FdEngine fd(ShortRateModel::mixed({}));
  SwapSpec s;
  s.fixed_rate = risk_free_par(fd, s);
  const HedgeReport h = fd_hedge_ratio(fd, CurveSet::risk_free(), s, DiscountRole::full(), 1e-4, false);
  EXPECT_TRUE(h.defined);
  EXPECT_NEAR(h.delta, 1.0, 1e-9);
  CurveSet c;
  c.c_cds = 0.05;
  EXPECT_LT(fd_hedge_ratio(fd, c, s, DiscountRole::full(), 1e-4, false).delta, 1.0);
}

TEST(HedgeRatio, BumpChecks) {
  const FdEngine fd(ShortRateModel::black_karasinski({}));
  SwapSpec s;
  EXPECT_THROW(fd_hedge_ratio(fd, CurveSet{}, s, DiscountRole::full(), 0.0), std::invalid_argument);
  EXPECT_THROW(fd_hedge_ratio(fd, CurveSet{}, s, DiscountRole::full(), 0.01), std::invalid_argument);
}

// Doubling the notional doubles the value and leaves the yield unchanged,
// switch included.
TEST(Analytics, NotionalInvariance) {
  const FdEngine fd(ShortRateModel::black_karasinski({}));
  SwapSpec s;
  s.fixed_rate = 0.017;
  CurveSet c;
  c.c_cds = bp(500);
  const double a = annuity(fd, s);
  const double v1 = fd.price(c, DiscountRole::full(), schedule(s)).npv;
  s.notional = 1e6;
  const double v2 = fd.price(c, DiscountRole::full(), schedule(s)).npv;
  EXPECT_NEAR(yield_value(v1, 1.0, a), yield_value(v2, 1e6, a), 1e-9);
}

TEST(Calibration, RecoversQuotesOfAKnownModel) {
  BkParams truth;
  truth.kappa = 0.25;
  truth.sigma = 0.75;
  truth.rho0 = 0.0028;
  const ModelQuotes q = model_quotes(ShortRateModel::black_karasinski(truth), 5.0, coarse());
  CalibrationTarget t{q.libor_3m, 5.0, q.par_swap_rate, q.atm_cap_yield_bp};
  const CalibrationResult r = calibrate(ShortRateModel::black_karasinski({}), t, coarse());
  EXPECT_LT(std::abs(r.residual_bp[0]), 0.1);
  EXPECT_LT(std::abs(r.residual_bp[1]), 0.1);
  EXPECT_LT(std::abs(r.residual_bp[2]), 0.5);
  EXPECT_NEAR(r.model.rho0(), truth.rho0, 2e-5);
}

TEST(Calibration, UnreachableTargetThrows) {
  CalibrationTarget t{0.002887, 5.0, 0.0172666, -40.0};
  CalibrationSettings cs;
  cs.max_iterations = 5;
  EXPECT_THROW(calibrate(ShortRateModel::mixed({}), t, coarse(), cs), ConvergenceError);
}
