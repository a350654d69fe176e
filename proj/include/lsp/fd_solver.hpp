#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <omp.h>

#include "lsp/instruments.hpp"
#include "lsp/rate_model.hpp"
#include "lsp/tridiagonal.hpp"

namespace lsp {

class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FdSettings {
  int nodes = 801;
  double dt = 0.0125;
  double half_width_std = 6.0;
  int aux_nodes = 64;
  int max_switch_iterations = 50;
  bool rannacher = true;
  bool store_surface = false;
  double libor_tenor = 0.25;
  int workers = 1;
};

/// Uniform grid in the model's state coordinate.
class Grid1D {
 public:
  Grid1D(const ShortRateModel& model, double lo, double hi, int nodes) {
    if (nodes < 8 || !(hi > lo)) throw GridError("grid needs >= 8 nodes and hi > lo");
    states_.resize(nodes);
    rates_.resize(nodes);
    h_ = (hi - lo) / (nodes - 1);
    for (int j = 0; j < nodes; ++j) {
      states_[j] = lo + j * h_;
      rates_[j] = model.to_rate(states_[j]);
    }
    states_.back() = hi;
    rates_.back() = model.to_rate(hi);
  }

  /// Half-width of `half_width_std` stationary deviations around the long-run
  /// level, widened to contain the initial rate. The mixed model's lower edge
  /// sits at rho = 0 where its volatility vanishes.
  static Grid1D for_model(const ShortRateModel& model, const FdSettings& s) {
    const double sd = model.stationary_std();
    const double x0 = model.state0();
    const double centre = model.level();
    double lo = std::min(x0, centre) - s.half_width_std * sd;
    double hi = std::max(x0, centre) + s.half_width_std * sd;
    if (model.kind() == ModelKind::Mixed) lo = 0.0;
    return Grid1D(model, lo, hi, s.nodes);
  }

  std::size_t size() const { return states_.size(); }
  double h() const { return h_; }
  double lo() const { return states_.front(); }
  double hi() const { return states_.back(); }
  double state(std::size_t j) const { return states_[j]; }
  double rate(std::size_t j) const { return rates_[j]; }
  std::span<const double> states() const { return states_; }
  std::span<const double> rates() const { return rates_; }

  bool contains(double state) const { return state >= lo() && state <= hi(); }

  /// Cubic Lagrange interpolation through the four nearest nodes.
  double interpolate(std::span<const double> v, double state) const {
    auto [i0, u] = stencil(state);
    const double w0 = -u * (u - 1) * (u - 2) / 6.0;
    const double w1 = (u + 1) * (u - 1) * (u - 2) / 2.0;
    const double w2 = -(u + 1) * u * (u - 2) / 2.0;
    const double w3 = (u + 1) * u * (u - 1) / 6.0;
    return w0 * v[i0] + w1 * v[i0 + 1] + w2 * v[i0 + 2] + w3 * v[i0 + 3];
  }

  /// d v / d state of the same cubic.
  double derivative(std::span<const double> v, double state) const {
    auto [i0, u] = stencil(state);
    const double d0 = -(3 * u * u - 6 * u + 2) / 6.0;
    const double d1 = (3 * u * u - 4 * u - 1) / 2.0;
    const double d2 = -(3 * u * u - 2 * u - 2) / 2.0;
    const double d3 = (3 * u * u - 1) / 6.0;
    return (d0 * v[i0] + d1 * v[i0 + 1] + d2 * v[i0 + 2] + d3 * v[i0 + 3]) / h_;
  }

  /// Piecewise-linear interpolation, clamped at the edges.
  double interpolate_linear(std::span<const double> v, double state) const {
    if (state <= lo()) return v.front();
    if (state >= hi()) return v.back();
    const double pos = (state - lo()) / h_;
    std::size_t i = std::min(static_cast<std::size_t>(pos), size() - 2);
    const double u = pos - static_cast<double>(i);
    return v[i] + u * (v[i + 1] - v[i]);
  }

 private:
  // Returns the first of four stencil nodes and the offset of `state` from
  // the second one, in units of h.
  std::pair<std::size_t, double> stencil(double state) const {
    if (!contains(state)) throw GridError("state outside the FD grid");
    const double pos = (state - lo()) / h_;
    long i = static_cast<long>(std::floor(pos)) - 1;
    i = std::clamp(i, 0L, static_cast<long>(size()) - 4);
    return {static_cast<std::size_t>(i), pos - static_cast<double>(i + 1)};
  }

  std::vector<double> states_;
  std::vector<double> rates_;
  double h_ = 0.0;
};

/// Convection-diffusion part of the backward generator, a V_z + b^2/2 V_zz,
/// as a tridiagonal stencil. Central differences where they keep the stencil
/// monotone, first-order upwind otherwise. Both ends assume V_zz = 0 and use
/// a one-sided inward first derivative.
class PdeOperator {
 public:
  PdeOperator(const ShortRateModel& model, const Grid1D& grid)
      : lower_(grid.size(), 0.0), centre_(grid.size(), 0.0), upper_(grid.size(), 0.0) {
    const std::size_t n = grid.size();
    const double h = grid.h();
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double mu = model.drift(grid.state(j));
      const double b = model.volatility(grid.state(j));
      const double diff = 0.5 * b * b / (h * h);
      if (std::abs(mu) * h <= b * b) {
        lower_[j] = diff - mu / (2 * h);
        upper_[j] = diff + mu / (2 * h);
      } else if (mu > 0) {
        lower_[j] = diff;
        upper_[j] = diff + mu / h;
      } else {
        lower_[j] = diff - mu / h;
        upper_[j] = diff;
      }
      centre_[j] = -lower_[j] - upper_[j];
    }
    const double mu_lo = model.drift(grid.state(0));
    centre_[0] = -mu_lo / h;
    upper_[0] = mu_lo / h;
    const double mu_hi = model.drift(grid.state(n - 1));
    centre_[n - 1] = mu_hi / h;
    lower_[n - 1] = -mu_hi / h;
  }

  std::size_t size() const { return centre_.size(); }
  std::span<const double> lower() const { return lower_; }
  std::span<const double> centre() const { return centre_; }
  std::span<const double> upper() const { return upper_; }

 private:
  std::vector<double> lower_, centre_, upper_;
};

/// Discount rates per grid node for the two sides of the switch.
struct NodeRates {
  std::vector<double> b;
  std::vector<double> c;

  static NodeRates from(const Grid1D& grid, const CurveSet& curves, DiscountRole role) {
    NodeRates out;
    out.b.resize(grid.size());
    out.c.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const RatePair f = curve_rates(curves, grid.rate(j), role);
      out.b[j] = f.b;
      out.c[j] = f.c;
    }
    return out;
  }

  /// Both sides at the same per-node rate (bonds, risk-free pricing).
  static NodeRates single(std::span<const double> rate) {
    NodeRates out;
    out.b.assign(rate.begin(), rate.end());
    out.c = out.b;
    return out;
  }

  double at(std::size_t j, std::uint8_t asset) const { return asset ? c[j] : b[j]; }
};

using SwitchMask = std::vector<std::uint8_t>;

/// 1 where the value is B's asset (discount at f_c), 0 where it is a
/// liability (f_b). A zero value counts as an asset.
inline void mask_from_values(std::span<const double> v, std::span<std::uint8_t> mask) {
  for (std::size_t j = 0; j < v.size(); ++j) mask[j] = v[j] >= 0.0 ? 1 : 0;
}

struct StepWorkspace {
  std::vector<double> lo, di, up, rhs, scratch;
  explicit StepWorkspace(std::size_t n = 0) : lo(n), di(n), up(n), rhs(n), scratch(n) {}
  void resize(std::size_t n) {
    lo.resize(n);
    di.resize(n);
    up.resize(n);
    rhs.resize(n);
    scratch.resize(n);
  }
};

/// One backward theta-step from s to t = s - dt. The reaction term uses the
/// discount rate selected by `mask_s` on the explicit side and by `mask_t`
/// (held fixed during the solve) on the implicit side. theta = 0.5 is
/// Crank-Nicolson, theta = 1 implicit Euler.
inline void step_back(const PdeOperator& op, std::span<const double> values_s,
                      const NodeRates& rates, std::span<const std::uint8_t> mask_s,
                      std::span<const std::uint8_t> mask_t, double dt, double theta,
                      std::span<double> values_t, StepWorkspace& ws) {
  const std::size_t n = op.size();
  ws.resize(n);
  const auto L = op.lower();
  const auto C = op.centre();
  const auto U = op.upper();
  const double ex = (1.0 - theta) * dt;
  const double im = theta * dt;
  for (std::size_t j = 0; j < n; ++j) {
    double av = C[j] * values_s[j];
    if (j > 0) av += L[j] * values_s[j - 1];
    if (j + 1 < n) av += U[j] * values_s[j + 1];
    ws.rhs[j] = values_s[j] + ex * (av - rates.at(j, mask_s[j]) * values_s[j]);
    ws.lo[j] = -im * L[j];
    ws.up[j] = -im * U[j];
    ws.di[j] = 1.0 - im * (C[j] - rates.at(j, mask_t[j]));
  }
  solve_tridiagonal(ws.lo, ws.di, ws.up, ws.rhs, values_t, ws.scratch);
}

struct SwitchOutcome {
  int iterations = 0;
  long unresolved = 0;  // nodes forced to the asset side after oscillating
};

/// Step back with a switch that agrees with the sign of the result: freeze
/// the mask, solve, recompute the mask from the new values, repeat until it
/// stops changing. Nodes still flipping after `max_iterations` take the tie
/// rule (asset side, f_c).
inline SwitchOutcome solve_switch(const PdeOperator& op, std::span<const double> values_s,
                                  const NodeRates& rates, double dt, double theta,
                                  int max_iterations, std::span<double> values_t,
                                  std::span<std::uint8_t> mask_t, StepWorkspace& ws) {
  const std::size_t n = op.size();
  SwitchMask mask_s(n), next(n);
  mask_from_values(values_s, mask_s);
  std::copy(mask_s.begin(), mask_s.end(), mask_t.begin());
  SwitchOutcome out;
  bool identical_rates = rates.b == rates.c;
  for (out.iterations = 1; out.iterations <= max_iterations; ++out.iterations) {
    step_back(op, values_s, rates, mask_s, mask_t, dt, theta, values_t, ws);
    if (identical_rates) break;
    mask_from_values(values_t, next);
    if (std::equal(next.begin(), next.end(), mask_t.begin())) break;
    if (out.iterations == max_iterations) {
      for (std::size_t j = 0; j < n; ++j) {
        if (next[j] != mask_t[j]) {
          mask_t[j] = 1;
          ++out.unresolved;
        } else {
          mask_t[j] = next[j];
        }
      }
      step_back(op, values_s, rates, mask_s, mask_t, dt, theta, values_t, ws);
      break;
    }
    std::copy(next.begin(), next.end(), mask_t.begin());
  }
  out.iterations = std::min(out.iterations, max_iterations);
  return out;
}

namespace detail {

// Advances `v` from step index k to k-1, replacing the step by two implicit
// half steps when `damp` is set.
inline SwitchOutcome advance(const PdeOperator& op, std::vector<double>& v,
                             std::vector<double>& tmp, std::span<std::uint8_t> mask,
                             const NodeRates& rates, double dt, bool damp, int max_iter,
                             StepWorkspace& ws) {
  SwitchOutcome total;
  auto one = [&](double h, double theta) {
    SwitchOutcome o = solve_switch(op, v, rates, h, theta, max_iter, tmp, mask, ws);
    total.iterations = std::max(total.iterations, o.iterations);
    total.unresolved += o.unresolved;
    v.swap(tmp);
  };
  if (damp) {
    one(0.5 * dt, 1.0);
    one(0.5 * dt, 1.0);
  } else {
    one(dt, 0.5);
  }
  return total;
}

inline long step_index(double t, double dt) {
  const double pos = t / dt;
  const long k = std::lround(pos);
  if (std::abs(pos - static_cast<double>(k)) > 1e-7) {
    throw GridError("event time " + std::to_string(t) + " is not on the time grid (dt=" +
                    std::to_string(dt) + ")");
  }
  return k;
}

}  // namespace detail

/// Discount bond prices P(t, t + tenor) per grid node, paying 1 at the end and
/// discounting each node at `rate`; solved on the same grid and stencil as
/// every other FD price.
inline std::vector<double> zcb_price(const PdeOperator& op, std::span<const double> rate,
                                     double tenor, double dt, bool rannacher = true) {
  std::vector<double> v(op.size(), 1.0);
  if (tenor <= 0.0) return v;
  const long steps = std::max(1L, std::lround(std::ceil(tenor / dt - 1e-9)));
  const double h = tenor / static_cast<double>(steps);
  const NodeRates rates = NodeRates::single(rate);
  std::vector<double> tmp(op.size());
  SwitchMask mask(op.size(), 1);
  StepWorkspace ws(op.size());
  for (long k = 0; k < steps; ++k) {
    detail::advance(op, v, tmp, mask, rates, h, rannacher && k == 0, 1, ws);
  }
  for (double p : v) {
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw GridError("zero coupon bond price not positive on the grid; widen or refine it");
    }
  }
  return v;
}

inline std::vector<double> zcb_price(const ShortRateModel& model, const Grid1D& grid,
                                     double tenor, double dt = 0.0125) {
  const PdeOperator op(model, grid);
  return zcb_price(op, grid.rates(), tenor, dt);
}

/// Term LIBOR per grid node, from the tenor bond discounted at the LIBOR
/// short rate. Linear interpolation in the state coordinate for path fixings.
class LiborCache {
 public:
  LiborCache() = default;
  LiborCache(const Grid1D& grid, const PdeOperator& op, double tenor, double dt)
      : states_(grid.states().begin(), grid.states().end()), tenor_(tenor) {
    zcb_ = zcb_price(op, grid.rates(), tenor, dt);
    libor_.resize(zcb_.size());
    for (std::size_t j = 0; j < zcb_.size(); ++j) libor_[j] = libor_from_zcb(zcb_[j], tenor);
    h_ = states_[1] - states_[0];
  }

  double tenor() const { return tenor_; }
  std::span<const double> node_libor() const { return libor_; }
  std::span<const double> node_zcb() const { return zcb_; }
  std::span<const double> states() const { return states_; }

  double libor(double state) const {
    if (state <= states_.front()) return libor_.front();
    if (state >= states_.back()) return libor_.back();
    const double pos = (state - states_.front()) / h_;
    std::size_t i = std::min(static_cast<std::size_t>(pos), libor_.size() - 2);
    const double u = pos - static_cast<double>(i);
    return libor_[i] + u * (libor_[i + 1] - libor_[i]);
  }

 private:
  std::vector<double> states_;
  std::vector<double> zcb_;
  std::vector<double> libor_;
  double tenor_ = 0.25;
  double h_ = 1.0;
};

struct FdSolution {
  double npv = 0.0;
  double delta = 0.0;  // dV/drho at rho0
  std::vector<double> values0;
  SwitchMask mask0;
  std::vector<double> times;                 // filled when surfaces are stored
  std::vector<std::vector<double>> values;   // V(t, node)
  std::vector<SwitchMask> switch_mask;       // I(V >= 0)
  int max_switch_iterations = 0;
  long unresolved_nodes = 0;
  long extrapolated_fixings = 0;

  /// Value at t = 0 for an arbitrary initial rate on the grid.
  double value_at_rate(const Grid1D& grid, const ShortRateModel& model, double rho) const {
    return grid.interpolate(values0, model.to_state(rho));
  }
};

/// Crank-Nicolson pricer of B's position under liability-side discounting.
///
/// Floating payments are handled with the fixing as an auxiliary state: over
/// each reset period the PDE is solved once per node of a fixing grid, then
/// the fixing dimension is collapsed on the diagonal fixing = L(rho) at the
/// reset date. Reset periods must not overlap.
class FdEngine {
 public:
  FdEngine(ShortRateModel model, FdSettings settings = {})
      : model_(std::move(model)),
        settings_(settings),
        grid_(Grid1D::for_model(model_, settings_)),
        op_(model_, grid_),
        libor_(grid_, op_, settings_.libor_tenor, settings_.dt) {
    check_grid();
  }

  FdEngine(ShortRateModel model, Grid1D grid, FdSettings settings = {})
      : model_(std::move(model)),
        settings_(settings),
        grid_(std::move(grid)),
        op_(model_, grid_),
        libor_(grid_, op_, settings_.libor_tenor, settings_.dt) {
    check_grid();
  }

  const ShortRateModel& model() const { return model_; }
  const FdSettings& settings() const { return settings_; }
  const Grid1D& grid() const { return grid_; }
  const PdeOperator& op() const { return op_; }
  const LiborCache& libor() const { return libor_; }

  /// Term LIBOR fixing at the model's initial rate.
  double libor0() const { return libor_.libor(model_.state0()); }

  FdSolution price(const CurveSet& curves, DiscountRole role,
                   std::span<const CashflowEvent> portfolio) const {
    return price(NodeRates::from(grid_, curves, role), portfolio);
  }

  FdSolution price(const NodeRates& rates, std::span<const CashflowEvent> portfolio) const;

  /// Values at the reset date of one period from the values just after its
  /// payment date, `n_steps` time steps earlier.
  std::vector<double> roll_payment(std::span<const double> values_after,
                                   std::span<const CashflowEvent> period, const NodeRates& rates,
                                   long n_steps, int* max_iterations = nullptr,
                                   long* unresolved = nullptr,
                                   long* extrapolated = nullptr) const;

  /// Price at rho0 of 1 paid at `maturity`, discounted on `curve`.
  double discount_bond(const CurveSet& curves, Curve curve, double maturity) const {
    CashflowEvent unit{maturity, maturity, FlowKind::Fixed, 0.0, 0.0, 1.0, 1.0};
    const Portfolio p{unit};
    return price(curves, DiscountRole{curve, curve}, p).npv;
  }

  /// Fixing grid used for one period: LIBOR at evenly spaced grid nodes plus
  /// every payoff kink of the period.
  std::vector<double> fixing_grid(std::span<const CashflowEvent> period) const;

 private:
  void check_grid() const {
    const double x0 = model_.state0();
    if (!grid_.contains(x0)) throw GridError("initial rate lies outside the FD grid");
    const double sd = model_.stationary_std();
    const bool natural_lower = model_.kind() == ModelKind::Mixed && grid_.lo() <= 0.0;
    if ((!natural_lower && x0 - grid_.lo() < 2.0 * sd) || grid_.hi() - x0 < 2.0 * sd) {
      throw GridError("FD grid truncates the rate distribution near rho0; widen half_width_std");
    }
  }

  ShortRateModel model_;
  FdSettings settings_;
  Grid1D grid_;
  PdeOperator op_;
  LiborCache libor_;
};

inline std::vector<double> FdEngine::fixing_grid(std::span<const CashflowEvent> period) const {
  const auto node_libor = libor_.node_libor();
  const std::size_t n = node_libor.size();
  const int m = std::max(2, settings_.aux_nodes);
  std::vector<double> out;
  out.reserve(m + period.size());
  for (int i = 0; i < m; ++i) {
    const std::size_t j = static_cast<std::size_t>(
        std::lround(static_cast<double>(i) * static_cast<double>(n - 1) / (m - 1)));
    out.push_back(node_libor[j]);
  }
  const double lo = *std::min_element(out.begin(), out.end());
  const double hi = *std::max_element(out.begin(), out.end());
  for (const auto& e : period) {
    if (e.has_kink() && e.strike > lo && e.strike < hi) out.push_back(e.strike);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-14; }),
            out.end());
  return out;
}

inline std::vector<double> FdEngine::roll_payment(std::span<const double> values_after,
                                                  std::span<const CashflowEvent> period,
                                                  const NodeRates& rates, long n_steps,
                                                  int* max_iterations, long* unresolved,
                                                  long* extrapolated) const {
  const std::size_t n = grid_.size();
  const std::vector<double> fixings = fixing_grid(period);
  const std::size_t m = fixings.size();
  std::vector<std::vector<double>> aux(m);
  int iter_max = 0;
  long unresolved_total = 0;

  const int workers = std::max(1, settings_.workers);
#pragma omp parallel for schedule(static) num_threads(workers) \
    reduction(max : iter_max) reduction(+ : unresolved_total)
  for (std::size_t a = 0; a < m; ++a) {
    double pay = 0.0;
    for (const auto& e : period) pay += e.amount(fixings[a]);
    std::vector<double> v(values_after.begin(), values_after.end());
    for (double& x : v) x += pay;
    std::vector<double> tmp(n);
    SwitchMask mask(n);
    StepWorkspace ws(n);
    for (long k = 0; k < n_steps; ++k) {
      const bool damp = settings_.rannacher && k == 0;
      SwitchOutcome o = detail::advance(op_, v, tmp, mask, rates, settings_.dt, damp,
                                        settings_.max_switch_iterations, ws);
      iter_max = std::max(iter_max, o.iterations);
      unresolved_total += o.unresolved;
    }
    aux[a] = std::move(v);
  }

  // Collapse onto the realised fixing L(rho_j) at each node.
  std::vector<double> out(n);
  const auto node_libor = libor_.node_libor();
  long extrap = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double l = node_libor[j];
    std::size_t hi = static_cast<std::size_t>(
        std::upper_bound(fixings.begin(), fixings.end(), l) - fixings.begin());
    if (hi == 0 || hi == m) ++extrap;
    hi = std::clamp<std::size_t>(hi, 1, m - 1);
    const std::size_t lo = hi - 1;
    const double w = (l - fixings[lo]) / (fixings[hi] - fixings[lo]);
    out[j] = aux[lo][j] + w * (aux[hi][j] - aux[lo][j]);
  }
  // The grid's own end nodes coincide with the first and last fixing.
  extrap = std::max(0L, extrap - 2);
  if (max_iterations) *max_iterations = std::max(*max_iterations, iter_max);
  if (unresolved) *unresolved += unresolved_total;
  if (extrapolated) *extrapolated += extrap;
  return out;
}

inline FdSolution FdEngine::price(const NodeRates& rates,
                                  std::span<const CashflowEvent> portfolio) const {
  const double dt = settings_.dt;
  const std::size_t n = grid_.size();

  // Group floating flows by (reset, pay) step; fixed flows by pay step.
  std::map<long, std::pair<long, Portfolio>> floating;  // pay step -> (reset step, flows)
  std::map<long, double> fixed;
  for (const auto& e : portfolio) {
    const long pay = detail::step_index(e.pay_time, dt);
    if (!e.floating()) {
      fixed[pay] += e.amount(0.0);
      continue;
    }
    const long reset = detail::step_index(e.reset_time, dt);
    if (reset >= pay || reset < 0) throw std::invalid_argument("reset must precede payment");
    auto [it, inserted] = floating.try_emplace(pay, reset, Portfolio{});
    if (!inserted && it->second.first != reset) {
      throw std::invalid_argument("flows paying together must share a reset date");
    }
    it->second.second.push_back(e);
  }
  long previous_reset = -1;
  for (auto it = floating.rbegin(); it != floating.rend(); ++it) {
    if (previous_reset >= 0 && it->first > previous_reset) {
      throw std::invalid_argument("overlapping reset periods are not supported");
    }
    previous_reset = it->second.first;
  }
  for (const auto& [pay, group] : floating) {
    for (const auto& [t, amount] : fixed) {
      if (t > group.first && t < pay) {
        throw std::invalid_argument("fixed flow inside a floating reset period");
      }
    }
  }

  long k_end = 0;
  if (!floating.empty()) k_end = floating.rbegin()->first;
  if (!fixed.empty()) k_end = std::max(k_end, fixed.rbegin()->first);

  FdSolution sol;
  std::vector<double> v(n, 0.0), tmp(n);
  SwitchMask mask(n, 1);
  StepWorkspace ws(n);
  auto record = [&](long k) {
    if (!settings_.store_surface) return;
    sol.times.push_back(static_cast<double>(k) * dt);
    sol.values.push_back(v);
    SwitchMask m(n);
    mask_from_values(v, m);
    sol.switch_mask.push_back(std::move(m));
  };

  long k = k_end;
  while (true) {
    bool jumped = false;
    if (auto f = fixed.find(k); f != fixed.end()) {
      for (double& x : v) x += f->second;
      jumped = true;
    }
    record(k);
    if (auto g = floating.find(k); g != floating.end()) {
      const long reset = g->second.first;
      // Inside a reset period the value depends on the fixing too, so only
      // reset dates make it into the stored surface.
      v = roll_payment(v, g->second.second, rates, k - reset, &sol.max_switch_iterations,
                       &sol.unresolved_nodes, &sol.extrapolated_fixings);
      k = reset;
      continue;  // process jumps at the reset date
    }
    if (k == 0) break;
    SwitchOutcome o = detail::advance(op_, v, tmp, mask, rates, dt, settings_.rannacher && jumped,
                                      settings_.max_switch_iterations, ws);
    sol.max_switch_iterations = std::max(sol.max_switch_iterations, o.iterations);
    sol.unresolved_nodes += o.unresolved;
    --k;
  }

  if (settings_.store_surface) {
    std::reverse(sol.times.begin(), sol.times.end());
    std::reverse(sol.values.begin(), sol.values.end());
    std::reverse(sol.switch_mask.begin(), sol.switch_mask.end());
  }
  const double x0 = model_.state0();
  if (!grid_.contains(x0)) throw GridError("rho0 outside the FD grid");
  sol.values0 = v;
  sol.mask0.resize(n);
  mask_from_values(v, sol.mask0);
  sol.npv = grid_.interpolate(v, x0);
  sol.delta = grid_.derivative(v, x0) / model_.rate_per_state(x0);
  return sol;
}

}  // namespace lsp
