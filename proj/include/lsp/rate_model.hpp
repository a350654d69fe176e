#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace lsp {

enum class ModelKind { Mixed, BlackKarasinski };

// How the Black-Karasinski long-run level is read. RateSpace: mu is a rate
// and x = ln(rho) reverts to ln(mu). LogSpace: mu is the log-rate target.
enum class LevelConvention { RateSpace, LogSpace };

struct MixedParams {
  double a = 0.21;
  double theta = 0.044;
  double sigma2 = 0.0252;
  double rho0 = 0.0018;
};

struct BkParams {
  double kappa = 0.2809;
  double mu = 0.044;
  double sigma = 0.8273;
  double rho0 = 0.0025;
  LevelConvention convention = LevelConvention::RateSpace;
};

inline constexpr double kMixedLowerBreak = 0.015;
inline constexpr double kMixedUpperBreak = 0.06;

/// Volatility of the mixed normal/lognormal short rate: lognormal below 1.5%
/// and above 6%, normal in between. Floored at zero for nonpositive rates.
inline double mixed_vol(double rho, double sigma2) {
  if (rho <= 0.0) return 0.0;
  if (rho < kMixedLowerBreak) return rho / kMixedLowerBreak * sigma2;
  if (rho < kMixedUpperBreak) return sigma2;
  return rho / kMixedUpperBreak * sigma2;
}

/// One-factor model of the LIBOR short rate rho.
///
/// Dynamics are expressed in a "state" coordinate in which both the FD grid
/// and the Euler scheme are uniform: rho itself for the mixed model and
/// x = ln(rho) for Black-Karasinski.
class ShortRateModel {
 public:
  static ShortRateModel mixed(const MixedParams& p) {
    if (!(p.a > 0.0) || !(p.sigma2 > 0.0) || !(p.rho0 > 0.0) || !std::isfinite(p.theta)) {
      throw std::invalid_argument("mixed model needs a > 0, sigma2 > 0, rho0 > 0");
    }
    return ShortRateModel(p);
  }

  static ShortRateModel black_karasinski(const BkParams& p) {
    if (!(p.kappa > 0.0) || !(p.sigma > 0.0) || !(p.rho0 > 0.0)) {
      throw std::invalid_argument("Black-Karasinski model needs kappa > 0, sigma > 0, rho0 > 0");
    }
    if (p.convention == LevelConvention::RateSpace && !(p.mu > 0.0)) {
      throw std::invalid_argument("rate-space Black-Karasinski level mu must be positive");
    }
    return ShortRateModel(p);
  }

  ModelKind kind() const {
    return std::holds_alternative<MixedParams>(params_) ? ModelKind::Mixed
                                                        : ModelKind::BlackKarasinski;
  }

  const MixedParams& mixed_params() const { return std::get<MixedParams>(params_); }
  const BkParams& bk_params() const { return std::get<BkParams>(params_); }

  double rho0() const {
    return std::visit([](const auto& p) { return p.rho0; }, params_);
  }

  ShortRateModel with_rho0(double rho0) const {
    auto copy = params_;
    std::visit([rho0](auto& p) { p.rho0 = rho0; }, copy);
    return std::visit([](const auto& p) { return make(p); }, copy);
  }

  double to_rate(double state) const {
    return kind() == ModelKind::Mixed ? state : std::exp(state);
  }

  double to_state(double rho) const {
    if (kind() == ModelKind::Mixed) return rho;
    if (!(rho > 0.0)) throw std::domain_error("Black-Karasinski state needs a positive rate");
    return std::log(rho);
  }

  double state0() const { return to_state(rho0()); }

  /// d(rate)/d(state); converts state-space deltas into rate deltas.
  double rate_per_state(double state) const {
    return kind() == ModelKind::Mixed ? 1.0 : std::exp(state);
  }

  /// Log-rate target of Black-Karasinski (x-bar); theta for the mixed model.
  double level() const {
    if (kind() == ModelKind::Mixed) return mixed_params().theta;
    const auto& p = bk_params();
    return p.convention == LevelConvention::RateSpace ? std::log(p.mu) : p.mu;
  }

  double drift(double state) const {
    if (kind() == ModelKind::Mixed) {
      const auto& p = mixed_params();
      return p.a * (p.theta - state);
    }
    return bk_params().kappa * (level() - state);
  }

  double volatility(double state) const {
    if (kind() == ModelKind::Mixed) return mixed_vol(state, mixed_params().sigma2);
    return bk_params().sigma;
  }

  /// Scale of the stationary distribution in state units, used to size grids.
  /// For the mixed model the normal mid-region value sigma2 / sqrt(2a) is used.
  double stationary_std() const {
    if (kind() == ModelKind::Mixed) {
      const auto& p = mixed_params();
      return p.sigma2 / std::sqrt(2.0 * p.a);
    }
    const auto& p = bk_params();
    return p.sigma / std::sqrt(2.0 * p.kappa);
  }

  std::string describe() const;

 private:
  using Params = std::variant<MixedParams, BkParams>;
  explicit ShortRateModel(Params p) : params_(p) {}
  static ShortRateModel make(const MixedParams& p) { return mixed(p); }
  static ShortRateModel make(const BkParams& p) { return black_karasinski(p); }

  Params params_;
};

inline std::string ShortRateModel::describe() const {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  if (kind() == ModelKind::Mixed) {
    const auto& p = mixed_params();
    return "mixed(a=" + fmt(p.a) + ",theta=" + fmt(p.theta) + ",sigma2=" + fmt(p.sigma2) +
           ",rho0=" + fmt(p.rho0) + ")";
  }
  const auto& p = bk_params();
  return "bk(kappa=" + fmt(p.kappa) + ",mu=" + fmt(p.mu) + ",sigma=" + fmt(p.sigma) +
         ",rho0=" + fmt(p.rho0) +
         (p.convention == LevelConvention::RateSpace ? ",mu_space=rate)" : ",mu_space=log)");
}

/// Deterministic spreads off the LIBOR short rate. All quantities are decimal
/// rates; party spreads are quoted over LIBOR (rho), so the OIS rate is
/// r = rho - libor_ois_spread and r_b = r + libor_ois_spread + b_cds + b_basis.
struct CurveSet {
  double libor_ois_spread = 0.0013;
  double b_cds = 0.0;
  double b_basis = 0.0;
  double c_cds = 0.0;
  double c_basis = 0.0;

  void validate() const {
    if (!(libor_ois_spread >= 0.0)) throw std::invalid_argument("LIBOR-OIS spread must be >= 0");
  }

  double ois(double rho) const { return rho - libor_ois_spread; }
  double b_full(double rho) const { return rho + b_cds + b_basis; }
  double c_full(double rho) const { return rho + c_cds + c_basis; }
  double b_default(double rho) const { return b_full(rho) - b_basis; }
  double c_default(double rho) const { return c_full(rho) - c_basis; }

  /// Funding spread over OIS that applies to a position of the given value:
  /// C's spread when it is an asset to B, B's own spread when a liability.
  double effective_spread(double value) const {
    return value >= 0.0 ? libor_ois_spread + c_cds + c_basis
                        : libor_ois_spread + b_cds + b_basis;
  }

  /// Both parties discounting at OIS.
  static CurveSet risk_free(double libor_ois = 0.0013) {
    return CurveSet{libor_ois, -libor_ois, 0.0, -libor_ois, 0.0};
  }
};

enum class Curve { Ois, Libor, BFull, CFull, BDefault, CDefault };

inline double curve_rate(const CurveSet& curves, Curve which, double rho) {
  switch (which) {
    case Curve::Ois: return curves.ois(rho);
    case Curve::Libor: return rho;
    case Curve::BFull: return curves.b_full(rho);
    case Curve::CFull: return curves.c_full(rho);
    case Curve::BDefault: return curves.b_default(rho);
    case Curve::CDefault: return curves.c_default(rho);
  }
  return rho;
}

/// The pair of curves (f_b, f_c) used by one pricing run: f_b discounts states
/// where the swap is B's liability, f_c where it is B's asset.
struct DiscountRole {
  Curve b = Curve::Ois;
  Curve c = Curve::Ois;

  static constexpr DiscountRole risk_free() { return {Curve::Ois, Curve::Ois}; }
  static constexpr DiscountRole counterparty_default() { return {Curve::Ois, Curve::CDefault}; }
  static constexpr DiscountRole default_only() { return {Curve::BDefault, Curve::CDefault}; }
  static constexpr DiscountRole counterparty_funding() { return {Curve::BDefault, Curve::CFull}; }
  static constexpr DiscountRole full() { return {Curve::BFull, Curve::CFull}; }

  friend constexpr bool operator==(DiscountRole, DiscountRole) = default;

  std::string name() const {
    auto n = [](Curve c) -> std::string_view {
      switch (c) {
        case Curve::Ois: return "r";
        case Curve::Libor: return "rho";
        case Curve::BFull: return "r_b";
        case Curve::CFull: return "r_c";
        case Curve::BDefault: return "r~_b";
        case Curve::CDefault: return "r~_c";
      }
      return "?";
    };
    return "(" + std::string(n(b)) + "," + std::string(n(c)) + ")";
  }
};

/// Order matters: consecutive roles differ in exactly one curve, so the
/// adjustments telescope from V(r,r) down to V(r_b,r_c).
inline constexpr std::array<DiscountRole, 5> kDecompositionChain = {
    DiscountRole::risk_free(), DiscountRole::counterparty_default(),
    DiscountRole::default_only(), DiscountRole::counterparty_funding(), DiscountRole::full()};

struct RatePair {
  double b;
  double c;
};

inline RatePair curve_rates(const CurveSet& curves, double rho, DiscountRole role) {
  return {curve_rate(curves, role.b, rho), curve_rate(curves, role.c, rho)};
}

/// Simple-compounding rate implied by a discount bond: P (1 + L tenor) = 1.
inline double libor_from_zcb(double price, double tenor) {
  if (!(price > 0.0)) throw std::domain_error("zero coupon bond price must be positive");
  if (!(tenor > 0.0)) throw std::domain_error("LIBOR tenor must be positive");
  return (1.0 / price - 1.0) / tenor;
}

inline double bp(double basis_points) { return basis_points * 1e-4; }

}  // namespace lsp
