#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace lsp {

enum class Direction { Payer, Receiver };

inline double direction_sign(Direction d) { return d == Direction::Payer ? 1.0 : -1.0; }

/// Plain vanilla fixed/float swap. Payer pays fixed and receives LIBOR set in
/// arrears: period i resets at T_{i-1} and pays at T_i = i / frequency.
struct SwapSpec {
  double notional = 1.0;
  double fixed_rate = 0.0;
  Direction direction = Direction::Payer;
  double tenor = 5.0;
  int frequency = 4;
  double daycount_fraction = 0.25;

  int periods() const {
    const double n = tenor * frequency;
    const long rounded = std::lround(n);
    if (frequency <= 0 || rounded <= 0 || std::abs(n - static_cast<double>(rounded)) > 1e-9) {
      throw std::invalid_argument("swap tenor * frequency must be a positive integer");
    }
    return static_cast<int>(rounded);
  }
};

enum class FlowKind {
  SwapNet,               // accrual * (L - K)
  CapletPositivePart,    // accrual * max(L - K, 0)
  FloorletNegativePart,  // -accrual * max(K - L, 0)
  Fixed                  // a known amount; reset_time is ignored
};

/// One cash flow of B's position. `sign` flips the whole payoff (receiver
/// legs, short options); `notional` scales it.
struct CashflowEvent {
  double reset_time = 0.0;
  double pay_time = 0.0;
  FlowKind kind = FlowKind::SwapNet;
  double accrual = 0.25;
  double strike = 0.0;
  double notional = 1.0;
  double sign = 1.0;

  bool floating() const { return kind != FlowKind::Fixed; }

  double amount(double fixing) const {
    switch (kind) {
      case FlowKind::SwapNet: return sign * notional * accrual * (fixing - strike);
      case FlowKind::CapletPositivePart:
        return sign * notional * accrual * std::max(fixing - strike, 0.0);
      case FlowKind::FloorletNegativePart:
        return -sign * notional * accrual * std::max(strike - fixing, 0.0);
      case FlowKind::Fixed: return sign * notional;
    }
    return 0.0;
  }

  /// Fixing at which the payoff has a kink, if any.
  bool has_kink() const {
    return kind == FlowKind::CapletPositivePart || kind == FlowKind::FloorletNegativePart;
  }
};

using Portfolio = std::vector<CashflowEvent>;

inline Portfolio schedule(const SwapSpec& spec) {
  const int n = spec.periods();
  if (!(spec.daycount_fraction > 0.0)) throw std::invalid_argument("accrual fraction must be > 0");
  Portfolio events;
  events.reserve(n);
  const double step = 1.0 / spec.frequency;
  for (int i = 1; i <= n; ++i) {
    CashflowEvent e;
    e.reset_time = (i - 1) * step;
    e.pay_time = i * step;
    e.kind = FlowKind::SwapNet;
    e.accrual = spec.daycount_fraction;
    e.strike = spec.fixed_rate;
    e.notional = spec.notional;
    e.sign = direction_sign(spec.direction);
    events.push_back(e);
  }
  return events;
}

/// Signed cash B receives on one period of the swap for a given fixing.
inline double payment(const SwapSpec& spec, double fixing) {
  return direction_sign(spec.direction) * spec.notional * spec.daycount_fraction *
         (fixing - spec.fixed_rate);
}

/// The swap split into the legs that are always B's asset and always B's
/// liability. A payer swap is a long cap plus a short floor; a receiver swap
/// is a long floor plus a short cap.
struct SignedLegs {
  Portfolio asset;
  Portfolio liability;
};

inline SignedLegs cap_floor_legs(const SwapSpec& spec) {
  SignedLegs legs;
  for (CashflowEvent e : schedule(spec)) {
    CashflowEvent cap = e;
    cap.kind = FlowKind::CapletPositivePart;
    CashflowEvent floor = e;
    floor.kind = FlowKind::FloorletNegativePart;
    if (spec.direction == Direction::Payer) {
      cap.sign = 1.0;
      floor.sign = 1.0;
      legs.asset.push_back(cap);
      legs.liability.push_back(floor);
    } else {
      cap.sign = -1.0;
      floor.sign = -1.0;
      legs.asset.push_back(floor);
      legs.liability.push_back(cap);
    }
  }
  return legs;
}

/// Long cap with all periods of the swap schedule, including the first
/// (already fixed) caplet.
inline Portfolio cap(const SwapSpec& spec, double strike) {
  Portfolio out;
  for (CashflowEvent e : schedule(spec)) {
    e.kind = FlowKind::CapletPositivePart;
    e.strike = strike;
    e.sign = 1.0;
    out.push_back(e);
  }
  return out;
}

/// A payment of `amount` at t_pay and a receipt of the same amount at
/// t_receive: two fixed flows that net to nothing as the gap closes.
inline Portfolio offsetting_pair(double t_pay, double t_receive, double amount = 1.0) {
  if (!(t_pay > 0.0) || !(t_receive > 0.0)) throw std::invalid_argument("flow times must be > 0");
  CashflowEvent pay{t_pay, t_pay, FlowKind::Fixed, 0.0, 0.0, amount, -1.0};
  CashflowEvent receive{t_receive, t_receive, FlowKind::Fixed, 0.0, 0.0, amount, 1.0};
  return {pay, receive};
}

inline Portfolio concat(Portfolio a, std::span<const CashflowEvent> b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline Portfolio scaled(std::span<const CashflowEvent> events, double factor) {
  Portfolio out(events.begin(), events.end());
  for (auto& e : out) e.notional *= factor;
  return out;
}

inline double last_payment_time(std::span<const CashflowEvent> events) {
  double t = 0.0;
  for (const auto& e : events) t = std::max(t, e.pay_time);
  return t;
}

}  // namespace lsp
