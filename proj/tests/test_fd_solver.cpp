#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "lsp/fd_solver.hpp"

using namespace lsp;

TEST(Tridiagonal, MatchesDenseSolve) {
  const int n = 40;
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> lo(n), di(n), up(n), rhs(n), x(n), scratch(n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = u(gen);
    up[i] = u(gen);
    di[i] = 3.0 + u(gen);
    rhs[i] = u(gen);
    a(i, i) = di[i];
    if (i > 0) a(i, i - 1) = lo[i];
    if (i + 1 < n) a(i, i + 1) = up[i];
    b(i) = rhs[i];
  }
  solve_tridiagonal(lo, di, up, rhs, x, scratch);
  const Eigen::VectorXd ref = a.partialPivLu().solve(b);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(x[i], ref(i), 1e-13);
}

TEST(Tridiagonal, ZeroPivotThrows) {
  std::vector<double> lo{0, 1}, di{0, 1}, up{1, 0}, rhs{1, 1}, x(2), s(2);
  EXPECT_THROW(solve_tridiagonal(lo, di, up, rhs, x, s), TridiagonalError);
}

namespace {

double ode_discount_mixed(const MixedParams& p, double t) {
  const double integral = p.theta * t + (p.rho0 - p.theta) * (1.0 - std::exp(-p.a * t)) / p.a;
  return std::exp(-integral);
}

double ode_discount_bk(const BkParams& p, double t) {
  const double lm = std::log(p.mu), x0 = std::log(p.rho0);
  const int n = 20000;
  const double h = t / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r = std::exp(lm + (x0 - lm) * std::exp(-p.kappa * i * h));
    s += (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0)) * r;
  }
  return std::exp(-s * h / 3.0);
}

FdSettings fine() {
  FdSettings s;
  s.nodes = 2001;
  s.dt = 0.005;
  return s;
}

}  // namespace

// With the volatility switched off the PDE collapses to the rate ODE along
// its characteristic, so the bond is exp(-integral of rho(t)).
TEST(FdEngine, DeterministicMixedBondMatchesOde) {
  MixedParams p;
  p.sigma2 = 1e-9;
  const auto m = ShortRateModel::mixed(p);
  const FdEngine fd(m, Grid1D(m, 0.0, 0.08, 2001), fine());
  for (double t : {1.0, 5.0}) {
    const double v = fd.discount_bond(CurveSet{}, Curve::Libor, t);
    EXPECT_NEAR(v, ode_discount_mixed(p, t), 2e-5 * t) << t;
  }
}

TEST(FdEngine, DeterministicBkBondMatchesOde) {
  BkParams p;
  p.sigma = 1e-6;
  const auto m = ShortRateModel::black_karasinski(p);
  const FdEngine fd(m, Grid1D(m, std::log(0.001), std::log(0.08), 2001), fine());
  const double v = fd.discount_bond(CurveSet{}, Curve::Libor, 5.0);
  EXPECT_NEAR(v, ode_discount_bk(p, 5.0), 1e-4);
}

TEST(FdEngine, BondIncreasesWithLowerRate) {
  const FdEngine fd(ShortRateModel::mixed({}));
  const Portfolio one{{1.0, 1.0, FlowKind::Fixed, 0.0, 0.0, 1.0, 1.0}};
  const FdSolution s = fd.price(CurveSet{}, DiscountRole::risk_free(), one);
  EXPECT_GT(s.npv, 0.0);
  EXPECT_LT(s.npv, 1.0);
  EXPECT_LT(s.delta, 0.0);
  EXPECT_GT(s.value_at_rate(fd.grid(), fd.model(), 0.001), s.value_at_rate(fd.grid(), fd.model(), 0.01));
}

// Without a switch pricing is linear, so the swap is its cap leg plus its
// floor leg.
TEST(FdEngine, SwapEqualsCapPlusFloorRiskFree) {
  for (auto m : {ShortRateModel::mixed({}), ShortRateModel::black_karasinski({})}) {
    const FdEngine fd(m);
    SwapSpec s;
    s.fixed_rate = 0.017;
    const SignedLegs legs = cap_floor_legs(s);
    const auto role = DiscountRole::risk_free();
    const double swap = fd.price(CurveSet{}, role, schedule(s)).npv;
    const double sum = fd.price(CurveSet{}, role, legs.asset).npv +
                       fd.price(CurveSet{}, role, legs.liability).npv;
    EXPECT_NEAR(swap, sum, 1e-6);
  }
}

TEST(FdEngine, PayerValueFallsAsCounterpartyWidens) {
  const FdEngine fd(ShortRateModel::mixed({}));
  SwapSpec s;
  s.fixed_rate = 0.017;
  const Portfolio pf = schedule(s);
  double prev = 1e9;
  for (double sp : {0.0, 0.0125, 0.025, 0.05, 0.1}) {
    CurveSet c;
    c.c_cds = sp;
    const double v = fd.price(c, DiscountRole::full(), pf).npv;
    EXPECT_LT(v, prev) << sp;
    prev = v;
  }
}

TEST(FdEngine, OffGridEventThrows) {
  const FdEngine fd(ShortRateModel::mixed({}));
  const Portfolio p{{0.0, 0.3333, FlowKind::Fixed, 0.0, 0.0, 1.0, 1.0}};
  EXPECT_THROW(fd.price(CurveSet{}, DiscountRole::risk_free(), p), GridError);
}

TEST(FdEngine, NarrowGridRejected) {
  const auto m = ShortRateModel::black_karasinski({});
  FdSettings s;
  s.half_width_std = 1.0;
  EXPECT_THROW(FdEngine(m, s), GridError);
}

TEST(FdEngine, LiborMatchesBondAtRho0) {
  const FdEngine fd(ShortRateModel::mixed({}));
  const double p = fd.discount_bond(CurveSet{}, Curve::Libor, 0.25);
  EXPECT_NEAR(fd.libor0(), libor_from_zcb(p, 0.25), 1e-8);
}
