#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/toms748_solve.hpp>

#include "lsp/fd_solver.hpp"
#include "lsp/instruments.hpp"
#include "lsp/lsmc.hpp"
#include "lsp/rate_model.hpp"

namespace lsp {

/// Raised when a root or a calibration does not converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Risk-free annuity sum_i accrual_i P(0, T_i) of a swap schedule, on the FD grid.
inline double annuity(const FdEngine& fd, const SwapSpec& spec) {
  Portfolio flows;
  for (const auto& e : schedule(spec)) {
    flows.push_back({e.pay_time, e.pay_time, FlowKind::Fixed, 0.0, 0.0, e.accrual, 1.0});
  }
  const double a = fd.price(CurveSet{}, DiscountRole::risk_free(), flows).npv;
  if (!(a > 0.0)) throw std::domain_error("annuity must be positive");
  return a;
}

/// npv per unit notional and annuity, in bp.
inline double yield_value(double npv, double notional, double annuity) {
  if (!(annuity > 0.0) || notional == 0.0) throw std::domain_error("yield value needs a positive annuity");
  return npv / (notional * annuity) * 1e4;
}

/// Prices a portfolio under one fixed market setup.
using NpvFunction = std::function<double(std::span<const CashflowEvent>)>;

inline NpvFunction fd_pricer(const FdEngine& fd, const CurveSet& curves, DiscountRole role) {
  return [&fd, curves, role](std::span<const CashflowEvent> p) {
    return fd.price(curves, role, p).npv;
  };
}

/// Regression pricer on one fixed set of paths, so that npv is a deterministic
/// function of the portfolio (common random numbers across calls). The bond
/// curve for the control estimator is built once from `dates_from`.
class LsmcPricer {
 public:
  LsmcPricer(const FdEngine& fd, const PathSet& paths, std::span<const CashflowEvent> dates_from,
             CurveSet curves, DiscountRole role, McSettings settings)
      : paths_(paths),
        libor_(fd.libor()),
        bonds_(bond_curve(fd, dates_from)),
        curves_(curves),
        role_(role),
        settings_(settings) {}

  McPrice price(std::span<const CashflowEvent> p) const {
    InductionRequest req;
    req.bonds = &bonds_;
    return backward_induct(paths_, libor_, p, curves_, role_, settings_, req).price;
  }

  double operator()(std::span<const CashflowEvent> p) const { return price(p).npv; }

 private:
  const PathSet& paths_;
  const LiborCache& libor_;
  BondCurve bonds_;
  CurveSet curves_;
  DiscountRole role_;
  McSettings settings_;
};

/// Risk-free par rate: the swap npv is linear in the fixed rate without a
/// switch, so float leg over annuity is exact.
inline double risk_free_par(const FdEngine& fd, SwapSpec spec) {
  spec.fixed_rate = 0.0;
  spec.direction = Direction::Payer;
  spec.notional = 1.0;
  const double floating = fd.price(CurveSet{}, DiscountRole::risk_free(), schedule(spec)).npv;
  return floating / annuity(fd, spec);
}

/// Fixed rate at which `npv` of the swap is zero. `guess` seeds the bracket;
/// the result satisfies |npv| < tol_bp in yield value.
inline double par_rate(const NpvFunction& npv, SwapSpec spec, double annuity_value, double guess,
                       double tol_bp = 0.01) {
  auto f = [&](double k) {
    spec.fixed_rate = k;
    return yield_value(npv(schedule(spec)), spec.notional, annuity_value);
  };
  double width = 0.0025;
  double lo = guess - width, hi = guess + width;
  double flo = f(lo), fhi = f(hi);
  for (int i = 0; i < 12 && flo * fhi > 0.0; ++i) {
    width *= 2.0;
    lo = guess - width;
    hi = guess + width;
    flo = f(lo);
    fhi = f(hi);
  }
  if (flo * fhi > 0.0) {
    throw ConvergenceError("par rate not bracketed: yield " + std::to_string(flo) + "bp at " +
                           std::to_string(lo) + ", " + std::to_string(fhi) + "bp at " +
                           std::to_string(hi));
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  std::uintmax_t max_iter = 60;
  auto stop = [&](double a, double b) { return std::abs(b - a) < 1e-10; };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, stop, max_iter);
  const double fa = f(a), fb = f(b);
  const double k = std::abs(fa) <= std::abs(fb) ? a : b;
  const double resid = std::min(std::abs(fa), std::abs(fb));
  if (!(resid < tol_bp)) {
    throw ConvergenceError("par rate residual " + std::to_string(resid) + "bp after " +
                           std::to_string(max_iter) + " iterations");
  }
  return k;
}

/// Dealer quotes for B: bid is the fixed rate B pays (payer side), ask the
/// rate B receives (receiver side). With C riskier than B the payer par falls
/// and the receiver par rises, so bid <= ask.
struct BidAsk {
  double bid = 0.0;
  double ask = 0.0;
  double spread_bp() const { return (ask - bid) * 1e4; }
};

inline BidAsk bid_ask(const NpvFunction& npv, SwapSpec spec, double annuity_value, double guess) {
  BidAsk out;
  spec.direction = Direction::Payer;
  out.bid = par_rate(npv, spec, annuity_value, guess);
  spec.direction = Direction::Receiver;
  out.ask = par_rate(npv, spec, annuity_value, guess);
  return out;
}

inline BidAsk fd_bid_ask(const FdEngine& fd, const CurveSet& curves, const SwapSpec& spec,
                         DiscountRole role = DiscountRole::full()) {
  const double a = annuity(fd, spec);
  return bid_ask(fd_pricer(fd, curves, role), spec, a, risk_free_par(fd, spec));
}

/// Hedge ratio against the CCP swap: dV/drho over dV*/drho at t = 0, from a
/// central bump of the initial rate.
struct HedgeReport {
  double delta = 0.0;
  bool defined = true;  // false where dV*/drho is too small to divide by
  std::vector<double> swaplet_delta;
  double bump = 1e-4;
  double value = 0.0;         // V of the whole swap
  double swaplet_sum = 0.0;   // sum of standalone swaplet values
  std::string engine;
};

namespace detail {

inline double ratio(double num, double den, bool& defined) {
  if (std::abs(den) < 1e-12) {
    defined = false;
    return std::nan("");
  }
  return num / den;
}

}  // namespace detail

/// FD route: differences on the t = 0 solution, which the grid already holds
/// for every initial rate. Each swaplet is priced on its own with its own
/// switch.
inline HedgeReport fd_hedge_ratio(const FdEngine& fd, const CurveSet& curves,
                                  const SwapSpec& spec, DiscountRole role = DiscountRole::full(),
                                  double bump = 1e-4, bool per_swaplet = true) {
  if (!(bump > 0.0)) throw std::invalid_argument("bump must be positive");
  const auto& m = fd.model();
  const double r0 = m.rho0();
  if (m.kind() == ModelKind::BlackKarasinski && !(r0 - bump > 0.0)) {
    throw std::invalid_argument("bump exceeds the initial rate");
  }
  auto slope = [&](const FdSolution& s) {
    return s.value_at_rate(fd.grid(), m, r0 + bump) - s.value_at_rate(fd.grid(), m, r0 - bump);
  };
  HedgeReport out;
  out.bump = bump;
  out.engine = "FD";
  const Portfolio pf = schedule(spec);
  const FdSolution v = fd.price(curves, role, pf);
  const FdSolution vs = fd.price(curves, DiscountRole::risk_free(), pf);
  out.value = v.npv;
  out.delta = detail::ratio(slope(v), slope(vs), out.defined);
  if (per_swaplet) {
    for (const auto& e : pf) {
      const Portfolio one{e};
      const FdSolution vi = fd.price(curves, role, one);
      const FdSolution vsi = fd.price(curves, DiscountRole::risk_free(), one);
      bool ok = true;
      out.swaplet_delta.push_back(detail::ratio(slope(vi), slope(vsi), ok));
      out.swaplet_sum += vi.npv;
    }
  }
  return out;
}

/// Monte Carlo route: bump-and-revalue on common random numbers. Fixings use
/// the base engine's LIBOR map, which does not depend on the initial rate.
inline HedgeReport mc_hedge_ratio(const FdEngine& fd, const CurveSet& curves, const SwapSpec& spec,
                                  const McSettings& settings,
                                  DiscountRole role = DiscountRole::full(), double bump = 1e-4) {
  if (!(bump > 0.0)) throw std::invalid_argument("bump must be positive");
  const auto& m = fd.model();
  const Portfolio pf = schedule(spec);
  const DiscountRole roles[2] = {DiscountRole::risk_free(), role};
  std::array<double, 2> v{}, vs{};
  for (int side = 0; side < 2; ++side) {
    const double r = m.rho0() + (side == 0 ? bump : -bump);
    const FdEngine shifted(m.with_rho0(r), fd.settings());
    const PathSet paths = simulate_paths(shifted.model(), settings.n_paths, last_payment_time(pf),
                                         settings.dt, settings.seed, settings.antithetic,
                                         settings.workers);
    const BondCurve bonds = bond_curve(shifted, pf);
    InductionRequest req;
    req.bonds = &bonds;
    const auto res = multi_role_induct(paths, fd.libor(), pf, curves, roles, settings, req);
    vs[side] = res.roles[0].price.npv;
    v[side] = res.roles[1].price.npv;
  }
  HedgeReport out;
  out.bump = bump;
  out.engine = "LSMC";
  out.value = 0.5 * (v[0] + v[1]);
  out.delta = detail::ratio(v[0] - v[1], vs[0] - vs[1], out.defined);
  return out;
}

/// Market quotes a short-rate model is fitted to. The cap is struck at the
/// model's own par swap rate of the same tenor.
struct CalibrationTarget {
  double libor_3m = 0.002887;
  double tenor = 5.0;
  double par_swap_rate = 0.0172666;
  double atm_cap_yield_bp = 73.0;

  static CalibrationTarget five_year() { return {}; }
  static CalibrationTarget ten_year() { return {0.002887, 10.0, 0.0235870, 86.83}; }
};

struct ModelQuotes {
  double libor_3m = 0.0;
  double par_swap_rate = 0.0;
  double atm_cap_yield_bp = 0.0;
  double annuity = 0.0;
};

inline ModelQuotes model_quotes(const FdEngine& fd, double tenor) {
  SwapSpec spec;
  spec.tenor = tenor;
  ModelQuotes q;
  q.libor_3m = fd.libor0();
  q.annuity = annuity(fd, spec);
  spec.fixed_rate = 0.0;
  const double floating = fd.price(CurveSet{}, DiscountRole::risk_free(), schedule(spec)).npv;
  q.par_swap_rate = floating / q.annuity;
  const double c = fd.price(CurveSet{}, DiscountRole::risk_free(), cap(spec, q.par_swap_rate)).npv;
  q.atm_cap_yield_bp = yield_value(c, 1.0, q.annuity);
  return q;
}

inline ModelQuotes model_quotes(const ShortRateModel& model, double tenor,
                                const FdSettings& settings = {}) {
  return model_quotes(FdEngine(model, settings), tenor);
}

struct CalibrationResult {
  ShortRateModel model;
  ModelQuotes quotes;
  std::array<double, 3> residual_bp{};  // model minus target: LIBOR, swap, cap
  int iterations = 0;
};

struct CalibrationSettings {
  int max_iterations = 40;
  // Residual tolerances in bp for (LIBOR, swap rate, cap yield).
  std::array<double, 3> tolerance_bp{0.1, 0.1, 0.5};
  // Iterate until every residual is below this fraction of its tolerance.
  double tighten = 0.05;
  double log_step = 1e-4;
};

namespace detail {

// Free parameters in log space: (a, sigma2, rho0) or (kappa, sigma, rho0).
inline std::array<double, 3> free_params(const ShortRateModel& m) {
  if (m.kind() == ModelKind::Mixed) {
    const auto& p = m.mixed_params();
    return {std::log(p.a), std::log(p.sigma2), std::log(p.rho0)};
  }
  const auto& p = m.bk_params();
  return {std::log(p.kappa), std::log(p.sigma), std::log(p.rho0)};
}

inline ShortRateModel with_free_params(const ShortRateModel& m, const std::array<double, 3>& z) {
  if (m.kind() == ModelKind::Mixed) {
    MixedParams p = m.mixed_params();
    p.a = std::exp(z[0]);
    p.sigma2 = std::exp(z[1]);
    p.rho0 = std::exp(z[2]);
    return ShortRateModel::mixed(p);
  }
  BkParams p = m.bk_params();
  p.kappa = std::exp(z[0]);
  p.sigma = std::exp(z[1]);
  p.rho0 = std::exp(z[2]);
  return ShortRateModel::black_karasinski(p);
}

}  // namespace detail

/// Levenberg-Marquardt on the three free parameters (in logs), the mixed
/// model's theta or the BK level held fixed. Quotes are FD risk-free prices.
inline CalibrationResult calibrate(const ShortRateModel& start, const CalibrationTarget& target,
                                   const FdSettings& fd_settings = {},
                                   const CalibrationSettings& cs = {}) {
  using Vec = Eigen::Vector3d;
  auto residual = [&](const ShortRateModel& m, ModelQuotes* q_out) {
    const ModelQuotes q = model_quotes(m, target.tenor, fd_settings);
    if (q_out) *q_out = q;
    Vec r;
    r(0) = (q.libor_3m - target.libor_3m) * 1e4 / cs.tolerance_bp[0];
    r(1) = (q.par_swap_rate - target.par_swap_rate) * 1e4 / cs.tolerance_bp[1];
    r(2) = (q.atm_cap_yield_bp - target.atm_cap_yield_bp) / cs.tolerance_bp[2];
    return r;
  };
  auto done = [&](const Vec& r) { return r.cwiseAbs().maxCoeff() < cs.tighten; };

  std::array<double, 3> z = detail::free_params(start);
  ShortRateModel model = start;
  ModelQuotes quotes;
  Vec r = residual(model, &quotes);
  double lambda = 1e-3;
  int it = 0;
  for (; it < cs.max_iterations && !done(r); ++it) {
    Eigen::Matrix3d J;
    for (int i = 0; i < 3; ++i) {
      auto zi = z;
      zi[i] += cs.log_step;
      J.col(i) = (residual(detail::with_free_params(start, zi), nullptr) - r) / cs.log_step;
    }
    const Eigen::Matrix3d JtJ = J.transpose() * J;
    const Vec g = J.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 12 && !improved; ++tries) {
      Eigen::Matrix3d A = JtJ;
      A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      Vec step = -A.ldlt().solve(g);
      // Keep each move within a factor of e per iteration.
      step = step.cwiseMax(-1.0).cwiseMin(1.0);
      auto zn = z;
      for (int i = 0; i < 3; ++i) zn[i] += step(i);
      try {
        const ShortRateModel trial = detail::with_free_params(start, zn);
        ModelQuotes qn;
        const Vec rn = residual(trial, &qn);
        if (rn.squaredNorm() < r.squaredNorm()) {
          z = zn;
          model = trial;
          quotes = qn;
          r = rn;
          lambda = std::max(lambda / 4.0, 1e-9);
          improved = true;
        } else {
          lambda *= 8.0;
        }
      } catch (const GridError&) {
        lambda *= 8.0;
      }
    }
    if (!improved) break;
  }
  CalibrationResult out{model, quotes, {}, it};
  for (int i = 0; i < 3; ++i) out.residual_bp[i] = r(i) * cs.tolerance_bp[i];
  bool ok = true;
  for (int i = 0; i < 3; ++i) ok = ok && std::abs(out.residual_bp[i]) < cs.tolerance_bp[i];
  if (!ok) {
    throw ConvergenceError("calibration of " + model.describe() + " stopped after " +
                           std::to_string(it) + " iterations with residuals (bp) LIBOR " +
                           std::to_string(out.residual_bp[0]) + ", swap " +
                           std::to_string(out.residual_bp[1]) + ", cap " +
                           std::to_string(out.residual_bp[2]));
  }
  return out;
}

}  // namespace lsp
