#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <omp.h>

#include "lsp/fd_solver.hpp"
#include "lsp/instruments.hpp"
#include "lsp/rate_model.hpp"

namespace lsp {

// Laguerre: L_0..L_n in the scaled regressor. WeightedLaguerre: a constant
// plus exp(-x/2) L_0..L_n, bounded in the right tail. Monomial: 1, x, .., x^n.
enum class BasisFamily { Laguerre, WeightedLaguerre, Monomial };
enum class Regressor { Rate, State };

// When the switch for the step [t_k, t_{k+1}] is decided.
//  EndOfStep: from the fitted value at t_{k+1} before that date's payment is
//    added (the switching matrix of the step-by-step procedure).
//  BeginningFreeze: from E_{t_k}[V(t_{k+1}-)], i.e. the value including the
//    payment at t_{k+1} regressed on the state at t_k.
//  Trapezoid: the discount spread is the average of the spreads selected at
//    both ends of the step, each from a regression of V(t_{k+1}-) (on the
//    state at t_k and at t_{k+1}). Second order in dt like Crank-Nicolson.
enum class SwitchTiming { EndOfStep, BeginningFreeze, Trapezoid };

// Short rate used over one step: the left endpoint or the average of both.
enum class RateRule { LeftPoint, Trapezoid };

// Plain: mean of pathwise values. ControlVariate: pathwise values of the
// same cash flows discounted on the fixed curves OIS, f_b and f_c (no switch)
// serve as controls; their exact values come from the LIBOR bond curve and
// their coefficients from a least-squares fit over the paths.
enum class Estimator { Plain, ControlVariate };

enum class SwitchRule { Regression, Naive };

struct McSettings {
  long n_paths = 100000;
  double dt = 0.0125;
  std::uint64_t seed = 20150601;
  bool antithetic = false;
  BasisFamily basis = BasisFamily::WeightedLaguerre;
  int basis_order = 2;
  Regressor regressor = Regressor::Rate;
  SwitchTiming timing = SwitchTiming::Trapezoid;
  RateRule rate_rule = RateRule::Trapezoid;
  Estimator estimator = Estimator::ControlVariate;
  bool pending_regressor = false;  // also regress on the already fixed next payment
  int block_size = 4096;
  int workers = 1;
};

/// Simulated model state per (time index k, path j), stored time-major.
class PathSet {
 public:
  PathSet(ShortRateModel model, long n_paths, long n_steps, double dt, std::uint64_t seed,
          bool antithetic)
      : model_(std::move(model)),
        n_paths_(n_paths),
        n_steps_(n_steps),
        dt_(dt),
        seed_(seed),
        antithetic_(antithetic),
        state_(static_cast<std::size_t>(n_paths) * (n_steps + 1)) {}

  const ShortRateModel& model() const { return model_; }
  long n_paths() const { return n_paths_; }
  long n_steps() const { return n_steps_; }
  double dt() const { return dt_; }
  std::uint64_t seed() const { return seed_; }
  bool antithetic() const { return antithetic_; }

  std::span<double> step(long k) {
    return {state_.data() + static_cast<std::size_t>(k) * n_paths_,
            static_cast<std::size_t>(n_paths_)};
  }
  std::span<const double> step(long k) const {
    return {state_.data() + static_cast<std::size_t>(k) * n_paths_,
            static_cast<std::size_t>(n_paths_)};
  }
  double state(long k, long j) const { return state_[static_cast<std::size_t>(k) * n_paths_ + j]; }
  double rate(long k, long j) const { return model_.to_rate(state(k, j)); }

  /// Term LIBOR fixings of every path at time index k.
  std::vector<double> fixings(const LiborCache& libor, long k) const {
    std::vector<double> out(n_paths_);
    const auto s = step(k);
    for (long j = 0; j < n_paths_; ++j) out[j] = libor.libor(s[j]);
    return out;
  }

 private:
  ShortRateModel model_;
  long n_paths_;
  long n_steps_;
  double dt_;
  std::uint64_t seed_;
  bool antithetic_;
  std::vector<double> state_;
};

/// Euler-Maruyama in the model's state coordinate. Each path (or antithetic
/// pair) draws from its own generator seeded by (seed, index), so the result
/// does not depend on how paths are spread over workers.
inline PathSet simulate_paths(const ShortRateModel& model, long n_paths, double horizon,
                              double dt, std::uint64_t seed, bool antithetic = false,
                              int workers = 1) {
  if (n_paths < 2) throw std::invalid_argument("need at least 2 paths");
  if (antithetic && n_paths % 2 != 0) {
    throw std::invalid_argument("antithetic sampling needs an even path count");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const long n_steps = detail::step_index(horizon, dt);
  PathSet paths(model, n_paths, n_steps, dt, seed, antithetic);
  const double x0 = model.state0();
  const double sqdt = std::sqrt(dt);
  const long streams = antithetic ? n_paths / 2 : n_paths;

#pragma omp parallel for schedule(static) num_threads(std::max(1, workers))
  for (long s = 0; s < streams; ++s) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
    std::mt19937_64 gen(seq);
    std::normal_distribution<double> normal;
    const long j0 = antithetic ? 2 * s : s;
    double xa = x0, xb = x0;
    paths.step(0)[j0] = x0;
    if (antithetic) paths.step(0)[j0 + 1] = x0;
    for (long k = 1; k <= n_steps; ++k) {
      const double z = normal(gen);
      xa += model.drift(xa) * dt + model.volatility(xa) * sqdt * z;
      paths.step(k)[j0] = xa;
      if (antithetic) {
        xb += model.drift(xb) * dt - model.volatility(xb) * sqdt * z;
        paths.step(k)[j0 + 1] = xb;
      }
    }
  }
  return paths;
}

/// One-step decoupled value of the sign-switching discount.
enum class DecoupleMode { BeginningFreeze, EndSplit };

inline double decouple_step(double expected, RatePair rates, double dt, DecoupleMode mode) {
  if (mode == DecoupleMode::BeginningFreeze) {
    return std::exp(-dt * (expected >= 0.0 ? rates.c : rates.b)) * expected;
  }
  return (1.0 - rates.c * dt) * expected - dt * (rates.b - rates.c) * std::min(expected, 0.0);
}

/// Sample mean and standard error. With antithetic sampling the error comes
/// from the pair averages.
struct SampleStats {
  double mean = 0.0;
  double std_err = 0.0;
};

inline SampleStats sample_stats(std::span<const double> x, bool antithetic) {
  const std::size_t n = x.size();
  if (n < 2) return {n ? x[0] : 0.0, 0.0};
  // Two passes in a fixed order keep the result independent of threading.
  auto stats = [](auto&& get, std::size_t m) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += get(i);
    const double mean = sum / static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = get(i) - mean;
      ss += d * d;
    }
    return SampleStats{mean, std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m))};
  };
  if (antithetic) {
    return stats([&](std::size_t i) { return 0.5 * (x[2 * i] + x[2 * i + 1]); }, n / 2);
  }
  return stats([&](std::size_t i) { return x[i]; }, n);
}

/// Identifies the simulation a price came from.
struct RunTag {
  std::uint64_t seed = 0;
  long n_paths = 0;
  double dt = 0.0;
  bool antithetic = false;
  friend bool operator==(const RunTag&, const RunTag&) = default;
};

struct McPrice {
  double npv = 0.0;
  double std_err = 0.0;
  long n_paths = 0;
  std::string engine = "LSMC";
  RunTag run;
  std::vector<double> samples;  // pathwise values whose mean is npv
};

/// Regression of pathwise values on basis functions of the state at one time
/// index. The normal matrix is shared by every target regressed at that step.
class StepRegression {
 public:
  StepRegression(BasisFamily family, int order, int block_size, int workers)
      : family_(family), order_(order), block_(std::max(64, block_size)), workers_(workers) {
    if (order < 1) throw std::invalid_argument("basis order must be >= 1");
  }

  /// Sets up the basis at one time index. Returns the number of columns that
  /// had to be dropped for rank.
  int prepare(std::span<const double> regressor, std::span<const double> pending = {}) {
    n_ = static_cast<long>(regressor.size());
    const bool extra = !pending.empty();
    const int p_full = base_columns() + (extra ? 2 : 0);
    phi_.resize(static_cast<std::size_t>(n_) * p_full);
    const long blocks = (n_ + block_ - 1) / block_;

    // Scale by the cross-sectional mean (magnitude if it is near zero).
    std::vector<double> part(blocks);
#pragma omp parallel for schedule(static) num_threads(std::max(1, workers_))
    for (long b = 0; b < blocks; ++b) {
      double s = 0.0;
      for (long j = b * block_; j < std::min(n_, (b + 1) * block_); ++j) s += regressor[j];
      part[b] = s;
    }
    double mean = 0.0;
    for (double s : part) mean += s;
    mean /= static_cast<double>(n_);
    double scale = std::abs(mean) > 1e-12 ? mean : 1.0;

    double zscale = 0.0;
    if (extra) {
      for (long j = 0; j < n_; ++j) zscale = std::max(zscale, std::abs(pending[j]));
      if (zscale == 0.0) zscale = 1.0;
    }
    for (long j = 0; j < n_; ++j) {
      double* row = &phi_[j * p_full];
      const double xi = regressor[j] / scale;
      basis_row(xi, row);
      if (extra) {
        const double z = pending[j] / zscale;
        row[base_columns()] = z;
        row[base_columns() + 1] = z * xi;
      }
    }

    // Normal matrix, block partials summed in block order.
    std::vector<Eigen::MatrixXd> gp(blocks, Eigen::MatrixXd::Zero(p_full, p_full));
#pragma omp parallel for schedule(static) num_threads(std::max(1, workers_))
    for (long b = 0; b < blocks; ++b) {
      Eigen::MatrixXd& g = gp[b];
      for (long j = b * block_; j < std::min(n_, (b + 1) * block_); ++j) {
        const double* r = &phi_[j * p_full];
        for (int u = 0; u < p_full; ++u)
          for (int v = 0; v <= u; ++v) g(u, v) += r[u] * r[v];
      }
    }
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p_full, p_full);
    for (const auto& x : gp) g += x;
    for (int u = 0; u < p_full; ++u)
      for (int v = u + 1; v < p_full; ++v) g(u, v) = g(v, u);

    p_ = p_full;
    while (p_ > 1) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(g.topLeftCorner(p_, p_));
      qr.setThreshold(1e-10);
      if (qr.rank() == p_) break;
      --p_;
    }
    p_full_ = p_full;
    ldlt_.compute(g.topLeftCorner(p_, p_));
    return p_full - p_;
  }

  /// Fitted values of `target` on the prepared basis, written to `fitted`.
  void fit(std::span<const double> target, std::span<double> fitted) const {
    const long blocks = (n_ + block_ - 1) / block_;
    std::vector<Eigen::VectorXd> rp(blocks, Eigen::VectorXd::Zero(p_));
#pragma omp parallel for schedule(static) num_threads(std::max(1, workers_))
    for (long b = 0; b < blocks; ++b) {
      Eigen::VectorXd& r = rp[b];
      for (long j = b * block_; j < std::min(n_, (b + 1) * block_); ++j) {
        const double* row = &phi_[j * p_full_];
        for (int u = 0; u < p_; ++u) r(u) += row[u] * target[j];
      }
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p_);
    for (const auto& x : rp) rhs += x;
    const Eigen::VectorXd beta = ldlt_.solve(rhs);
#pragma omp parallel for schedule(static) num_threads(std::max(1, workers_))
    for (long j = 0; j < n_; ++j) {
      const double* row = &phi_[j * p_full_];
      double u = 0.0;
      for (int c = 0; c < p_; ++c) u += row[c] * beta(c);
      fitted[j] = u;
    }
  }

  int columns() const { return p_; }

 private:
  int base_columns() const {
    return order_ + (family_ == BasisFamily::WeightedLaguerre ? 2 : 1);
  }

  void basis_row(double xi, double* out) const {
    if (family_ == BasisFamily::WeightedLaguerre) {
      out[0] = 1.0;
      const double w = std::exp(-0.5 * xi);
      double lm = 1.0, l = 1.0 - xi;
      out[1] = w;
      if (order_ >= 1) out[2] = w * l;
      for (int n = 1; n < order_; ++n) {
        const double next = ((2.0 * n + 1.0 - xi) * l - n * lm) / (n + 1.0);
        lm = l;
        l = next;
        out[n + 2] = w * l;
      }
      return;
    }
    if (family_ == BasisFamily::Monomial) {
      double p = 1.0;
      for (int i = 0; i <= order_; ++i) {
        out[i] = p;
        p *= xi;
      }
      return;
    }
    // Laguerre recurrence: (n+1) L_{n+1} = (2n+1-x) L_n - n L_{n-1}.
    out[0] = 1.0;
    if (order_ >= 1) out[1] = 1.0 - xi;
    for (int n = 1; n < order_; ++n) {
      out[n + 1] = ((2.0 * n + 1.0 - xi) * out[n] - n * out[n - 1]) / (n + 1.0);
    }
  }

  BasisFamily family_;
  int order_;
  long block_;
  int workers_;
  long n_ = 0;
  int p_ = 0;
  int p_full_ = 0;
  std::vector<double> phi_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

/// Indicator per (time index, path): 1 discounts at f_c, 0 at f_b.
struct SwitchMatrix {
  long n_paths = 0;
  long n_steps = 0;
  std::vector<std::uint8_t> b;  // time-major, (n_steps + 1) * n_paths
  std::uint8_t at(long k, long j) const { return b[static_cast<std::size_t>(k) * n_paths + j]; }
};

/// P(0, t) discounting at the LIBOR short rate, on the dates a portfolio
/// needs. Swaps discounted on a constant spread o to rho have closed-form
/// values in these bonds.
struct BondCurve {
  double dt = 0.0125;
  double libor_tenor = 0.25;
  std::map<long, double> p;  // time index -> P(0, t)

  double at(double t) const {
    const long k = detail::step_index(t, dt);
    if (k == 0) return 1.0;
    auto it = p.find(k);
    if (it == p.end()) throw std::out_of_range("bond curve has no price at t=" + std::to_string(t));
    return it->second;
  }
};

inline BondCurve bond_curve(const FdEngine& fd, std::span<const CashflowEvent> portfolio) {
  BondCurve out;
  out.dt = fd.settings().dt;
  out.libor_tenor = fd.libor().tenor();
  const CurveSet curves;
  for (const auto& e : portfolio) {
    for (double t : {e.reset_time, e.pay_time}) {
      const long k = detail::step_index(t, out.dt);
      if (k > 0 && !out.p.count(k)) out.p[k] = fd.discount_bond(curves, Curve::Libor, t);
    }
  }
  return out;
}

/// Exact value of a portfolio of swaplets and fixed flows discounted at
/// rho + offset. A floating payment of accrual * L at T_p, with L the term rate
/// fixed at T_p - tenor, is worth (accrual / tenor) e^{-o T_p} (P(T_r) - P(T_p)).
inline double constant_spread_value(std::span<const CashflowEvent> portfolio,
                                    const BondCurve& bonds, double offset) {
  double v = 0.0;
  for (const auto& e : portfolio) {
    const double df = std::exp(-offset * e.pay_time) * bonds.at(e.pay_time);
    switch (e.kind) {
      case FlowKind::Fixed: v += e.sign * e.notional * df; break;
      case FlowKind::SwapNet: {
        if (std::abs(e.pay_time - e.reset_time - bonds.libor_tenor) > 1e-9) {
          throw std::invalid_argument("closed form needs the payment one LIBOR tenor after reset");
        }
        const double fwd = std::exp(-offset * e.pay_time) * bonds.at(e.reset_time) - df;
        v += e.sign * e.notional * (e.accrual / bonds.libor_tenor * fwd - e.accrual * e.strike * df);
        break;
      }
      default: throw std::invalid_argument("closed form only covers swap and fixed flows");
    }
  }
  return v;
}

struct ExposureProfile {
  std::vector<double> times;
  std::vector<double> epe;  // E[exp(-int r) max(V*, 0)]
  std::vector<double> ene;  // E[exp(-int r) min(V*, 0)]
};

struct RoleResult {
  DiscountRole role;
  McPrice price;
  std::vector<double> switch_fraction;  // share of paths discounting at f_c per step
  std::optional<SwitchMatrix> switches;
  std::optional<McPrice> cra;           // integral form of V* - V
};

struct InductionRequest {
  SwitchRule rule = SwitchRule::Regression;
  bool exposure = false;
  bool cra = false;
  bool store_switches = false;
  const BondCurve* bonds = nullptr;  // required by the control estimator
};

struct InductionResult {
  std::vector<RoleResult> roles;
  McPrice risk_free;  // plain pathwise estimate of the CCP value
  std::optional<ExposureProfile> exposure;
  long rank_drops = 0;  // unexpected column drops (the t = 0 drop is not counted)
};

namespace detail {

struct PayGroup {
  long pay_step;
  std::vector<std::pair<long, CashflowEvent>> flows;  // (reset step, event)
};

inline std::map<long, PayGroup> group_payments(std::span<const CashflowEvent> portfolio,
                                               double dt) {
  std::map<long, PayGroup> out;
  for (const auto& e : portfolio) {
    const long pay = step_index(e.pay_time, dt);
    const long reset = e.floating() ? step_index(e.reset_time, dt) : pay;
    if (reset > pay || reset < 0) throw std::invalid_argument("reset must not follow payment");
    auto& g = out[pay];
    g.pay_step = pay;
    g.flows.emplace_back(reset, e);
  }
  return out;
}

inline double curve_offset(const CurveSet& curves, Curve c) { return curve_rate(curves, c, 0.0); }

// Control-variate adjustment y - sum_c beta_c (Y_c - E[Y_c]) with beta from
// least squares, fitted on antithetic pair averages when paths are paired.
// Accumulated in path order so the result does not depend on threading.
inline std::vector<double> apply_controls(const std::vector<double>& y,
                                          const std::vector<std::vector<double>>& tracks,
                                          const std::vector<std::size_t>& ctl,
                                          const std::vector<double>& exact, bool antithetic) {
  const std::size_t n = y.size();
  const int p = static_cast<int>(ctl.size()) + 1;
  const std::size_t step = antithetic ? 2 : 1;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd row(p);
  for (std::size_t j = 0; j + step <= n; j += step) {
    row(0) = 1.0;
    double yj = 0.0;
    for (std::size_t m = 0; m < step; ++m) yj += y[j + m];
    yj /= static_cast<double>(step);
    for (int c = 1; c < p; ++c) {
      double v = 0.0;
      for (std::size_t m = 0; m < step; ++m) v += tracks[ctl[c - 1]][j + m];
      row(c) = v / static_cast<double>(step) - exact[ctl[c - 1]];
    }
    g.noalias() += row * row.transpose();
    rhs.noalias() += row * yj;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(g);
  qr.setThreshold(1e-12);
  const Eigen::VectorXd beta = qr.solve(rhs);
  std::vector<double> out(y);
  for (std::size_t j = 0; j < n; ++j) {
    for (int c = 1; c < p; ++c) out[j] -= beta(c) * (tracks[ctl[c - 1]][j] - exact[ctl[c - 1]]);
  }
  return out;
}

}  // namespace detail

/// Backward induction of B's pathwise value under several discount roles at
/// once, on common paths. Each role keeps its own value vector and switch;
/// the regression basis is shared.
inline InductionResult multi_role_induct(const PathSet& paths, const LiborCache& libor,
                                         std::span<const CashflowEvent> portfolio,
                                         const CurveSet& curves,
                                         std::span<const DiscountRole> roles,
                                         const McSettings& settings,
                                         const InductionRequest& request = {}) {
  curves.validate();
  const long n = paths.n_paths();
  const double dt = paths.dt();
  if (std::abs(dt - settings.dt) > 1e-15) throw std::invalid_argument("path dt differs from settings");
  const auto groups = detail::group_payments(portfolio, dt);
  if (groups.empty()) throw std::invalid_argument("empty portfolio");
  const long K = groups.rbegin()->first;
  if (K > paths.n_steps()) throw std::invalid_argument("paths end before the last payment");
  const bool control = settings.estimator == Estimator::ControlVariate;
  if (control && !request.bonds) {
    throw std::invalid_argument("control estimator needs a bond curve");
  }
  const int workers = std::max(1, settings.workers);
  const std::size_t R = roles.size();
  const ShortRateModel& model = paths.model();
  const RunTag tag{paths.seed(), n, dt, paths.antithetic()};

  // Tracks 0..C-1 discount on one fixed curve each (track 0 is OIS, the
  // risk-free value); tracks C..C+R-1 are the requested roles.
  std::vector<Curve> fixed_curves{Curve::Ois};
  if (control) {
    for (const auto& role : roles) {
      for (Curve c : {role.b, role.c}) {
        if (std::find(fixed_curves.begin(), fixed_curves.end(), c) == fixed_curves.end()) {
          fixed_curves.push_back(c);
        }
      }
    }
  }
  const std::size_t C = fixed_curves.size();
  const std::size_t T = C + R;
  std::vector<DiscountRole> track_role(T);
  for (std::size_t c = 0; c < C; ++c) track_role[c] = {fixed_curves[c], fixed_curves[c]};
  for (std::size_t r = 0; r < R; ++r) track_role[C + r] = roles[r];
  std::vector<double> off_b(T), off_c(T);
  for (std::size_t r = 0; r < T; ++r) {
    off_b[r] = detail::curve_offset(curves, track_role[r].b);
    off_c[r] = detail::curve_offset(curves, track_role[r].c);
  }
  std::vector<double> grow_b(T), grow_c(T);
  for (std::size_t r = 0; r < T; ++r) {
    grow_b[r] = std::exp(-dt * off_b[r]);
    grow_c[r] = std::exp(-dt * off_c[r]);
  }
  const double off_r = detail::curve_offset(curves, Curve::Ois);

  std::vector<std::vector<double>> V(T, std::vector<double>(n, 0.0));
  const bool two_sided = settings.timing == SwitchTiming::Trapezoid;
  std::vector<std::vector<std::uint8_t>> B(T, std::vector<std::uint8_t>(n, 1));
  std::vector<std::vector<std::uint8_t>> B_end(two_sided ? T : 0, std::vector<std::uint8_t>(n, 1));
  std::vector<double> half_b(T), half_c(T);
  for (std::size_t r = 0; r < T; ++r) {
    half_b[r] = std::exp(-0.5 * dt * off_b[r]);
    half_c[r] = std::exp(-0.5 * dt * off_c[r]);
  }
  std::vector<std::vector<double>> cra(request.cra ? T : 0, std::vector<double>(n, 0.0));
  std::vector<double> fitted(n), cash(n), disc(n), rate_avg(n);

  InductionResult result;
  result.roles.resize(R);
  for (std::size_t r = 0; r < R; ++r) {
    result.roles[r].role = roles[r];
    result.roles[r].switch_fraction.assign(K + 1, 0.0);
    if (request.store_switches) {
      result.roles[r].switches = SwitchMatrix{n, K, std::vector<std::uint8_t>((K + 1) * n, 1)};
    }
  }

  // Prefix integral of r for exposures: total minus the running suffix.
  std::vector<double> suffix;
  std::vector<double> total_int;
  if (request.exposure) {
    suffix.assign(n, 0.0);
    total_int.assign(n, 0.0);
    for (long k = 0; k < K; ++k) {
      const auto s0 = paths.step(k);
      const auto s1 = paths.step(k + 1);
      for (long j = 0; j < n; ++j) {
        const double a = model.to_rate(s0[j]);
        const double b = model.to_rate(s1[j]);
        total_int[j] += dt * ((settings.rate_rule == RateRule::Trapezoid ? 0.5 * (a + b) : a) + off_r);
      }
    }
    result.exposure = ExposureProfile{};
    result.exposure->times.resize(K + 1);
    result.exposure->epe.assign(K + 1, 0.0);
    result.exposure->ene.assign(K + 1, 0.0);
    for (long k = 0; k <= K; ++k) result.exposure->times[k] = k * dt;
  }

  StepRegression reg(settings.basis, settings.basis_order, settings.block_size, workers);
  std::vector<double> regressor(n), pending;
  auto prepare = [&](long k) {
    const auto s = paths.step(k);
    for (long j = 0; j < n; ++j) {
      regressor[j] = settings.regressor == Regressor::Rate ? model.to_rate(s[j]) : s[j];
    }
    if (settings.pending_regressor) {
      // Payments already fixed at t_k but not yet paid.
      pending.assign(n, 0.0);
      for (const auto& [pay, g] : groups) {
        if (pay <= k) continue;
        for (const auto& [reset, e] : g.flows) {
          if (!e.floating() || reset > k) continue;
          const auto sr = paths.step(reset);
          for (long j = 0; j < n; ++j) pending[j] += e.amount(libor.libor(sr[j]));
        }
      }
    }
    const int dropped = reg.prepare(regressor, pending);
    if (k > 0) result.rank_drops += dropped;
  };

  // Sets the switch of track r from the values in V[r] (fit or raw sign).
  auto set_switch = [&](std::size_t r, std::vector<std::uint8_t>& out) {
    if (request.rule == SwitchRule::Naive) {
      for (long j = 0; j < n; ++j) out[j] = V[r][j] >= 0.0 ? 1 : 0;
      return;
    }
    reg.fit(V[r], fitted);
    for (long j = 0; j < n; ++j) out[j] = fitted[j] >= 0.0 ? 1 : 0;
  };
  auto record_switch = [&](long k) {
    for (std::size_t r = 0; r < R; ++r) {
      auto& rr = result.roles[r];
      long on = 0;
      for (long j = 0; j < n; ++j) on += B[C + r][j];
      rr.switch_fraction[k] = static_cast<double>(on) / static_cast<double>(n);
      if (rr.switches) {
        std::copy(B[C + r].begin(), B[C + r].end(),
                  rr.switches->b.begin() + static_cast<std::size_t>(k) * n);
      }
    }
  };
  // Fixed-curve tracks never switch.
  auto update_switches = [&](std::vector<std::vector<std::uint8_t>>& target) {
    for (std::size_t r = C; r < T; ++r) {
      if (off_b[r] == off_c[r]) continue;
      set_switch(r, target[r]);
    }
  };
  auto add_cash = [&](long k) {
    auto it = groups.find(k);
    if (it == groups.end()) return false;
    std::fill(cash.begin(), cash.end(), 0.0);
    for (const auto& [reset, e] : it->second.flows) {
      const auto s = paths.step(reset);
      for (long j = 0; j < n; ++j) {
        cash[j] += e.amount(e.floating() ? libor.libor(s[j]) : 0.0);
      }
    }
    for (std::size_t r = 0; r < T; ++r)
      for (long j = 0; j < n; ++j) V[r][j] += cash[j];
    return true;
  };
  auto record_exposure = [&](long k) {
    if (!request.exposure) return;
    // Exposure uses the fitted risk-free value at k (before its payment).
    if (k == 0) {
      double m = 0.0;
      for (long j = 0; j < n; ++j) m += V[0][j];
      m /= static_cast<double>(n);
      result.exposure->epe[0] = std::max(m, 0.0);
      result.exposure->ene[0] = std::min(m, 0.0);
      return;
    }
    reg.fit(V[0], fitted);
    double pos = 0.0, neg = 0.0;
    for (long j = 0; j < n; ++j) {
      const double d = std::exp(-(total_int[j] - suffix[j]));
      pos += std::max(fitted[j], 0.0) * d;
      neg += std::min(fitted[j], 0.0) * d;
    }
    result.exposure->epe[k] = pos / static_cast<double>(n);
    result.exposure->ene[k] = neg / static_cast<double>(n);
  };

  // Terminal date.
  add_cash(K);
  if (settings.timing != SwitchTiming::BeginningFreeze) prepare(K);
  if (settings.timing == SwitchTiming::EndOfStep) update_switches(B);
  record_switch(K);

  for (long k = K - 1; k >= 0; --k) {
    const auto s0 = paths.step(k);
    const auto s1 = paths.step(k + 1);
    if (two_sided) update_switches(B_end);  // basis still at t_{k+1}
    if (settings.timing != SwitchTiming::EndOfStep) {
      prepare(k);
      update_switches(B);
      record_switch(k);
    }
    for (long j = 0; j < n; ++j) {
      const double a = model.to_rate(s0[j]);
      const double rho = settings.rate_rule == RateRule::Trapezoid ? 0.5 * (a + model.to_rate(s1[j])) : a;
      rate_avg[j] = rho;
      disc[j] = std::exp(-dt * rho);
    }
    if (request.cra) {
      // Integrand (f - r) V* on [t_k, t_{k+1}], trapezoid in V*; V[0] holds V*(t_{k+1}-).
      for (std::size_t r = C; r < T; ++r) {
        for (long j = 0; j < n; ++j) {
          const bool asset = B[r][j] != 0;
          double spread = (asset ? off_c[r] : off_b[r]) - off_r;
          double d = disc[j] * (asset ? grow_c[r] : grow_b[r]);
          if (two_sided) {
            const bool asset_end = B_end[r][j] != 0;
            spread = 0.5 * (spread + (asset_end ? off_c[r] : off_b[r]) - off_r);
            d = disc[j] * (asset ? half_c[r] : half_b[r]) * (asset_end ? half_c[r] : half_b[r]);
          }
          const double vstar_end = V[0][j];
          const double vstar_start = vstar_end * disc[j] * grow_c[0];
          cra[r][j] = spread * dt * 0.5 * (vstar_start + d * vstar_end) + d * cra[r][j];
        }
      }
    }
    for (std::size_t r = 0; r < T; ++r) {
      auto& v = V[r];
      const auto& b = B[r];
      if (two_sided && r >= C) {
        const double hb = half_b[r], hc = half_c[r];
        const auto& e = B_end[r];
        for (long j = 0; j < n; ++j) v[j] *= disc[j] * (b[j] ? hc : hb) * (e[j] ? hc : hb);
      } else {
        const double gb = grow_b[r], gc = grow_c[r];
        for (long j = 0; j < n; ++j) v[j] *= disc[j] * (b[j] ? gc : gb);
      }
    }
    if (request.exposure) {
      for (long j = 0; j < n; ++j) suffix[j] += dt * (rate_avg[j] + off_r);
    }
    if (settings.timing == SwitchTiming::EndOfStep) {
      if (k >= 1 || request.exposure) prepare(k);
      if (k >= 1) {
        update_switches(B);
        record_switch(k);
      }
    }
    record_exposure(k);
    add_cash(k);
  }
  if (settings.timing == SwitchTiming::EndOfStep) record_switch(0);

  // Estimators.
  std::vector<double> exact(C);
  if (control) {
    for (std::size_t c = 0; c < C; ++c) {
      exact[c] = constant_spread_value(portfolio, *request.bonds, off_b[c]);
    }
  }
  auto finish = [&](McPrice& p, std::vector<double> samples, const std::vector<std::size_t>& ctl,
                    const char* engine) {
    if (!ctl.empty()) samples = detail::apply_controls(samples, V, ctl, exact, paths.antithetic());
    const SampleStats st = sample_stats(samples, paths.antithetic());
    p.npv = st.mean;
    p.std_err = st.std_err;
    p.n_paths = n;
    p.run = tag;
    p.engine = engine;
    p.samples = std::move(samples);
  };
  finish(result.risk_free, V[0], {}, "MC");
  for (std::size_t r = 0; r < R; ++r) {
    std::vector<std::size_t> ctl;
    if (control) {
      for (std::size_t c = 0; c < C; ++c) {
        if (fixed_curves[c] == Curve::Ois || fixed_curves[c] == roles[r].b ||
            fixed_curves[c] == roles[r].c) {
          ctl.push_back(c);
        }
      }
    }
    finish(result.roles[r].price, V[C + r], ctl,
           request.rule == SwitchRule::Naive ? "MC" : "LSMC");
    if (request.cra) {
      McPrice c;
      finish(c, cra[C + r], ctl, "LSMC-CRA");
      result.roles[r].cra = std::move(c);
    }
  }
  return result;
}

/// Single-role regression pricing.
inline RoleResult backward_induct(const PathSet& paths, const LiborCache& libor,
                                  std::span<const CashflowEvent> portfolio, const CurveSet& curves,
                                  DiscountRole role, const McSettings& settings,
                                  const InductionRequest& request = {}) {
  const DiscountRole roles[1] = {role};
  InductionRequest req = request;
  req.rule = SwitchRule::Regression;
  return std::move(multi_role_induct(paths, libor, portfolio, curves, roles, settings, req).roles[0]);
}

/// Brute-force pricing: the switch follows the sign of each path's own value.
inline RoleResult backward_induct_naive(const PathSet& paths, const LiborCache& libor,
                                        std::span<const CashflowEvent> portfolio,
                                        const CurveSet& curves, DiscountRole role,
                                        const McSettings& settings,
                                        const InductionRequest& request = {}) {
  const DiscountRole roles[1] = {role};
  InductionRequest req = request;
  req.rule = SwitchRule::Naive;
  return std::move(multi_role_induct(paths, libor, portfolio, curves, roles, settings, req).roles[0]);
}

}  // namespace lsp
