#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "lsp/fd_solver.hpp"
#include "lsp/instruments.hpp"
#include "lsp/lsmc.hpp"
#include "lsp/rate_model.hpp"

namespace lsp {

struct Estimate {
  double value = 0.0;
  double std_err = 0.0;  // zero for FD
};

/// Counterparty risk adjustment and its split. All adjustments are positive
/// for the usual setups; cra = cva - dva + cfa - dfa.
struct XvaReport {
  Estimate npv;  // V(r_b, r_c)
  Estimate risk_free;
  Estimate cra;
  Estimate cva;
  Estimate dva;
  Estimate cfa;
  Estimate dfa;
  std::string engine;

  XvaReport scaled(double factor) const {
    XvaReport out = *this;
    for (Estimate* e : {&out.npv, &out.risk_free, &out.cra, &out.cva, &out.dva, &out.cfa, &out.dfa}) {
      e->value *= factor;
      e->std_err *= std::abs(factor);
    }
    return out;
  }
};

namespace detail {

inline void check_chain(std::span<const DiscountRole> roles) {
  if (roles.size() != kDecompositionChain.size()) {
    throw std::invalid_argument("decomposition needs exactly the five chain roles");
  }
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (!(roles[i] == kDecompositionChain[i])) {
      throw std::invalid_argument("role " + roles[i].name() + " out of chain order");
    }
  }
}

// Difference a - b of two priced roles, with the error of the pathwise
// difference.
inline Estimate difference(const McPrice& a, const McPrice& b, bool antithetic) {
  std::vector<double> d(a.samples.size());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = a.samples[j] - b.samples[j];
  const SampleStats st = sample_stats(d, antithetic);
  return {a.npv - b.npv, st.std_err};
}

}  // namespace detail

/// Split from five Monte Carlo prices on common paths, in chain order
/// (r,r), (r,r~_c), (r~_b,r~_c), (r~_b,r_c), (r_b,r_c).
inline XvaReport decompose(std::span<const McPrice> prices, std::span<const DiscountRole> roles) {
  detail::check_chain(roles);
  if (prices.size() != 5) throw std::invalid_argument("decomposition needs five prices");
  for (const auto& p : prices) {
    if (!(p.run == prices[0].run) || p.samples.size() != prices[0].samples.size()) {
      throw std::invalid_argument("decomposition needs all roles priced on the same paths");
    }
  }
  const bool anti = prices[0].run.antithetic;
  XvaReport out;
  out.engine = prices[4].engine;
  out.npv = {prices[4].npv, prices[4].std_err};
  out.risk_free = {prices[0].npv, prices[0].std_err};
  out.cra = detail::difference(prices[0], prices[4], anti);
  out.cva = detail::difference(prices[0], prices[1], anti);
  out.dva = detail::difference(prices[2], prices[1], anti);
  out.cfa = detail::difference(prices[2], prices[3], anti);
  out.dfa = detail::difference(prices[4], prices[3], anti);
  return out;
}

inline XvaReport decompose(const InductionResult& result) {
  std::vector<McPrice> prices;
  std::vector<DiscountRole> roles;
  for (const auto& r : result.roles) {
    prices.push_back(r.price);
    roles.push_back(r.role);
  }
  return decompose(prices, roles);
}

/// Same split from five FD prices (no sampling error).
inline XvaReport decompose(std::span<const double> v, std::span<const DiscountRole> roles) {
  detail::check_chain(roles);
  XvaReport out;
  out.engine = "FD";
  out.npv = {v[4], 0.0};
  out.risk_free = {v[0], 0.0};
  out.cra = {v[0] - v[4], 0.0};
  out.cva = {v[0] - v[1], 0.0};
  out.dva = {v[2] - v[1], 0.0};
  out.cfa = {v[2] - v[3], 0.0};
  out.dfa = {v[4] - v[3], 0.0};
  return out;
}

inline XvaReport fd_xva(const FdEngine& fd, const CurveSet& curves,
                        std::span<const CashflowEvent> portfolio) {
  std::array<double, 5> v{};
  for (std::size_t i = 0; i < 5; ++i) v[i] = fd.price(curves, kDecompositionChain[i], portfolio).npv;
  return decompose(v, kDecompositionChain);
}

inline XvaReport mc_xva(const PathSet& paths, const LiborCache& libor,
                        std::span<const CashflowEvent> portfolio, const CurveSet& curves,
                        const McSettings& settings, const InductionRequest& request = {}) {
  return decompose(
      multi_role_induct(paths, libor, portfolio, curves, kDecompositionChain, settings, request));
}

/// V* - V as the expected integral of (r_e - r) V* discounted at r_e, with
/// r_e taken from the regression switch of role (r_b, r_c).
inline McPrice cra_integral(const PathSet& paths, const LiborCache& libor,
                            std::span<const CashflowEvent> portfolio, const CurveSet& curves,
                            const McSettings& settings, const InductionRequest& request = {}) {
  InductionRequest req = request;
  req.cra = true;
  const DiscountRole roles[1] = {DiscountRole::full()};
  auto res = multi_role_induct(paths, libor, portfolio, curves, roles, settings, req);
  return *res.roles[0].cra;
}

/// EPE / ENE of the risk-free value from its regression fits.
inline ExposureProfile exposure_profile(const PathSet& paths, const LiborCache& libor,
                                        std::span<const CashflowEvent> portfolio,
                                        const McSettings& settings) {
  InductionRequest req;
  req.exposure = true;
  McSettings s = settings;
  s.estimator = Estimator::Plain;
  auto res = multi_role_induct(paths, libor, portfolio, CurveSet{}, {}, s, req);
  return *res.exposure;
}

struct ExposureXva {
  double cva = 0.0;
  double dva = 0.0;
  double cfa = 0.0;
  double dfa = 0.0;
};

/// Approximate adjustments from exposure profiles: the risk-free value
/// replaces V and one side's curve replaces the switch. The profiles are
/// already discounted at r, so only the spread over r is discounted here.
inline ExposureXva xva_from_exposure(const ExposureProfile& profile, const CurveSet& curves) {
  const double s = curves.libor_ois_spread;
  const double c_default = s + curves.c_cds;
  const double b_default = s + curves.b_cds;
  const double c_total = c_default + curves.c_basis;
  const double b_total = b_default + curves.b_basis;
  ExposureXva out;
  const auto& t = profile.times;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double h = t[k + 1] - t[k];
    auto trap = [&](double w, double spread, const std::vector<double>& e, double sign) {
      const double f0 = w * sign * e[k] * std::exp(-spread * t[k]);
      const double f1 = w * sign * e[k + 1] * std::exp(-spread * t[k + 1]);
      return 0.5 * h * (f0 + f1);
    };
    out.cva += trap(c_default, c_total, profile.epe, 1.0);
    out.cfa += trap(curves.c_basis, c_total, profile.epe, 1.0);
    out.dva += trap(b_default, b_total, profile.ene, -1.0);
    out.dfa += trap(curves.b_basis, b_total, profile.ene, -1.0);
  }
  return out;
}

/// Portfolio split by cash-flow sign: flows B always receives and flows B
/// always pays. Swaplets split into their cap and floor parts.
inline SignedLegs cash_flow_legs(std::span<const CashflowEvent> portfolio) {
  SignedLegs legs;
  for (const auto& e : portfolio) {
    switch (e.kind) {
      case FlowKind::Fixed:
        (e.sign * e.notional >= 0.0 ? legs.asset : legs.liability).push_back(e);
        break;
      case FlowKind::CapletPositivePart:
        (e.sign * e.notional >= 0.0 ? legs.asset : legs.liability).push_back(e);
        break;
      case FlowKind::FloorletNegativePart:
        (e.sign * e.notional >= 0.0 ? legs.liability : legs.asset).push_back(e);
        break;
      case FlowKind::SwapNet: {
        CashflowEvent cap = e;
        cap.kind = FlowKind::CapletPositivePart;
        CashflowEvent floor = e;
        floor.kind = FlowKind::FloorletNegativePart;
        const bool long_side = e.sign * e.notional >= 0.0;
        (long_side ? legs.asset : legs.liability).push_back(cap);
        (long_side ? legs.liability : legs.asset).push_back(floor);
        break;
      }
    }
  }
  return legs;
}

struct HubnerReport {
  double asset_leg = 0.0;      // inflows discounted at r_c
  double liability_leg = 0.0;  // outflows discounted at r_b
  double hubner = 0.0;         // asset_leg + liability_leg
  double lsp = 0.0;            // liability-side price of the whole portfolio
  double diff = 0.0;           // lsp - hubner
};

/// Cash-flow-sign discounting compared with value-sign discounting, on the FD
/// grid. Each leg is priced with the full role; a leg whose flows all share
/// one sign is discounted on a single curve by construction.
inline HubnerReport hubner_price(const FdEngine& fd, const CurveSet& curves,
                                 std::span<const CashflowEvent> portfolio,
                                 DiscountRole role = DiscountRole::full()) {
  const SignedLegs legs = cash_flow_legs(portfolio);
  HubnerReport out;
  if (!legs.asset.empty()) out.asset_leg = fd.price(curves, role, legs.asset).npv;
  if (!legs.liability.empty()) out.liability_leg = fd.price(curves, role, legs.liability).npv;
  out.hubner = out.asset_leg + out.liability_leg;
  out.lsp = fd.price(curves, role, portfolio).npv;
  out.diff = out.lsp - out.hubner;
  return out;
}

}  // namespace lsp
