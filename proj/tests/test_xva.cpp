#include <gtest/gtest.h>

#include <cmath>

#include "lsp/xva.hpp"

using namespace lsp;

namespace {

void expect_identity(const XvaReport& r, double tol) {
  EXPECT_NEAR(r.cra.value, r.cva.value - r.dva.value + r.cfa.value - r.dfa.value, tol);
  EXPECT_NEAR(r.cra.value, r.risk_free.value - r.npv.value, tol);
}

CurveSet ladder_row() {
  CurveSet c;
  c.b_cds = bp(75);
  c.b_basis = bp(50);
  c.c_cds = bp(170);
  c.c_basis = bp(80);
  return c;
}

}  // namespace

TEST(Decompose, FdTelescopes) {
  const FdEngine fd(ShortRateModel::mixed({}));
  SwapSpec s;
  s.fixed_rate = 0.0172;
  const XvaReport r = fd_xva(fd, ladder_row(), schedule(s));
  expect_identity(r, 1e-12);
  EXPECT_GT(r.cra.value, 0.0);
  EXPECT_GT(r.cva.value, 0.0);
  EXPECT_EQ(r.engine, "FD");
}

TEST(Decompose, McTelescopesAndKeepsErrors) {
  const FdEngine fd(ShortRateModel::black_karasinski({}));
  SwapSpec s;
  s.fixed_rate = 0.0172;
  const Portfolio pf = schedule(s);
  McSettings mc;
  mc.n_paths = 4000;
  const PathSet paths = simulate_paths(fd.model(), mc.n_paths, 5.0, mc.dt, mc.seed);
  const BondCurve bonds = bond_curve(fd, pf);
  InductionRequest req;
  req.bonds = &bonds;
  const XvaReport r = mc_xva(paths, fd.libor(), pf, ladder_row(), mc, req);
  expect_identity(r, 1e-12);
  for (const Estimate* e : {&r.cra, &r.cva, &r.dva, &r.cfa, &r.dfa}) EXPECT_GE(e->std_err, 0.0);
  const XvaReport sc = r.scaled(-2.0);
  EXPECT_DOUBLE_EQ(sc.cva.value, -2.0 * r.cva.value);
  EXPECT_DOUBLE_EQ(sc.cva.std_err, 2.0 * r.cva.std_err);
}

TEST(Decompose, RejectsWrongChainOrMixedRuns) {
  std::vector<McPrice> p(5);
  std::vector<DiscountRole> roles(kDecompositionChain.begin(), kDecompositionChain.end());
  std::swap(roles[1], roles[2]);
  EXPECT_THROW(decompose(p, roles), std::invalid_argument);
  roles.assign(kDecompositionChain.begin(), kDecompositionChain.end());
  p[3].run.seed = 9;
  EXPECT_THROW(decompose(p, roles), std::invalid_argument);
}

// A flat profile has closed-form adjustments: w E (1 - e^{-sT}) / s.
TEST(ExposureXva, FlatProfileMatchesIntegral) {
  ExposureProfile prof;
  const double T = 5.0, E = 0.02, F = -0.015;
  for (int k = 0; k <= 400; ++k) {
    prof.times.push_back(k * T / 400);
    prof.epe.push_back(E);
    prof.ene.push_back(F);
  }
  const CurveSet c = ladder_row();
  const ExposureXva x = xva_from_exposure(prof, c);
  auto integral = [&](double w, double s, double e) { return w * e * (1 - std::exp(-s * T)) / s; };
  const double sc = c.libor_ois_spread + c.c_cds + c.c_basis;
  const double sb = c.libor_ois_spread + c.b_cds + c.b_basis;
  EXPECT_NEAR(x.cva, integral(c.libor_ois_spread + c.c_cds, sc, E), 1e-9);
  EXPECT_NEAR(x.cfa, integral(c.c_basis, sc, E), 1e-9);
  EXPECT_NEAR(x.dva, integral(c.libor_ois_spread + c.b_cds, sb, -F), 1e-9);
  EXPECT_NEAR(x.dfa, integral(c.b_basis, sb, -F), 1e-9);
}

TEST(CashFlowLegs, SplitsBySign) {
  SwapSpec s;
  s.fixed_rate = 0.02;
  const SignedLegs legs = cash_flow_legs(concat(schedule(s), offsetting_pair(1.0, 2.0)));
  EXPECT_EQ(legs.asset.size(), 21u);
  EXPECT_EQ(legs.liability.size(), 21u);
  for (double fix : {0.0, 0.01, 0.05}) {
    for (const auto& e : legs.asset) EXPECT_GE(e.amount(fix), 0.0);
    for (const auto& e : legs.liability) EXPECT_LE(e.amount(fix), 0.0);
  }
}

TEST(Hubner, AgreesWhenFlowsShareOneSign) {
  const FdEngine fd(ShortRateModel::mixed({}));
  CurveSet c;
  c.c_cds = 0.02;
  const Portfolio p{{1.0, 1.0, FlowKind::Fixed, 0.0, 0.0, 1.0, 1.0},
                    {2.0, 2.0, FlowKind::Fixed, 0.0, 0.0, 1.0, 1.0}};
  const HubnerReport h = hubner_price(fd, c, p);
  EXPECT_NEAR(h.diff, 0.0, 1e-12);
  EXPECT_EQ(h.liability_leg, 0.0);
}

TEST(Hubner, NettingMattersForOffsettingFlows) {
  const FdEngine fd(ShortRateModel::black_karasinski({}));
  CurveSet c;
  c.c_cds = bp(125);
  const HubnerReport h = hubner_price(fd, c, offsetting_pair(4.95, 5.0));
  EXPECT_LT(h.hubner, -0.01);
  EXPECT_LT(std::abs(h.lsp), std::abs(h.hubner) / 10);
}
