#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsp/analytics.hpp"
#include "lsp/fd_solver.hpp"
#include "lsp/instruments.hpp"
#include "lsp/lsmc.hpp"
#include "lsp/rate_model.hpp"

namespace lsp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Calibration { None, FiveYear, TenYear, Custom };

struct ModelConfig {
  ModelKind kind = ModelKind::Mixed;
  MixedParams mixed;
  BkParams bk;
  Calibration calibrate = Calibration::None;
  CalibrationTarget target;  // used when calibrate = custom

  ShortRateModel start() const {
    return kind == ModelKind::Mixed ? ShortRateModel::mixed(mixed)
                                    : ShortRateModel::black_karasinski(bk);
  }
};

struct InstrumentConfig {
  SwapSpec swap;
  bool atm = true;  // fixed rate = risk-free par of the model
};

struct EngineConfig {
  std::string engine = "fd";  // fd | lsmc | naive | both
  McSettings mc;
  FdSettings fd;
};

struct XvaConfig {
  std::vector<double> c_spread_bp{37.5, 75, 125, 250, 500, 1000};
  std::vector<double> c_basis_bp{15, 30, 50, 80, 80, 80};
  std::vector<std::string> labels{"AAA/AA+", "AA/AA-", "A", "BBB", "BB", "B"};
  double b_cds_bp = 75;
  double b_basis_bp = 50;
  bool exposure = true;
};

struct FigureConfig {
  double max_spread_bp = 2000;
  double step_bp = 100;
  double tenor = 5;
  double itm_strike_bp = 500;
  double otm_strike_bp = 500;
  double bump_bp = 1;
};

struct TablesConfig {
  bool calibrate = true;
  double two_flow_gap = 0.05;
};

struct OutputConfig {
  std::string dir = "out";
  bool raw_npv = false;
};

struct RunConfig {
  ModelConfig model;
  CurveSet curves;
  InstrumentConfig instrument;
  EngineConfig engine;
  XvaConfig xva;
  FigureConfig figures;
  TablesConfig tables;
  OutputConfig output;

  /// Every effective parameter as "section.key = value" lines.
  std::vector<std::string> echo() const;
  void validate() const;
};

namespace detail {

inline std::string trim(std::string s) {
  auto sp = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), sp));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), sp).base(), s.end());
  return s;
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* b = v.data();
  const char* e = v.data() + v.size();
  auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || p != e) throw ConfigError(key + ": not a number: '" + v + "'");
  return out;
}

inline long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": not an integer: '" + v + "'");
  }
  return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  const std::string l = lower(v);
  if (l == "true" || l == "yes" || l == "1" || l == "on") return true;
  if (l == "false" || l == "no" || l == "0" || l == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  return out;
}

inline std::vector<std::string> to_words(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

template <class E>
E pick(const std::string& key, const std::string& v, std::initializer_list<std::pair<const char*, E>> opts) {
  const std::string l = lower(v);
  std::string names;
  for (const auto& [n, e] : opts) {
    if (l == n) return e;
    names += std::string(names.empty() ? "" : "|") + n;
  }
  throw ConfigError(key + ": expected " + names + ", got '" + v + "'");
}

template <class E>
std::string name_of(E e, std::initializer_list<std::pair<const char*, E>> opts) {
  for (const auto& [n, x] : opts) {
    if (x == e) return n;
  }
  return "?";
}

inline const std::initializer_list<std::pair<const char*, ModelKind>> kKinds{
    {"mixed", ModelKind::Mixed}, {"bk", ModelKind::BlackKarasinski}};
inline const std::initializer_list<std::pair<const char*, Calibration>> kCalibrations{
    {"none", Calibration::None},
    {"5y", Calibration::FiveYear},
    {"10y", Calibration::TenYear},
    {"custom", Calibration::Custom}};
inline const std::initializer_list<std::pair<const char*, LevelConvention>> kLevels{
    {"rate", LevelConvention::RateSpace}, {"log", LevelConvention::LogSpace}};
inline const std::initializer_list<std::pair<const char*, Direction>> kDirections{
    {"payer", Direction::Payer}, {"receiver", Direction::Receiver}};
inline const std::initializer_list<std::pair<const char*, BasisFamily>> kBases{
    {"weighted_laguerre", BasisFamily::WeightedLaguerre},
    {"laguerre", BasisFamily::Laguerre},
    {"monomial", BasisFamily::Monomial}};
inline const std::initializer_list<std::pair<const char*, Regressor>> kRegressors{
    {"rate", Regressor::Rate}, {"state", Regressor::State}};
inline const std::initializer_list<std::pair<const char*, SwitchTiming>> kTimings{
    {"trapezoid", SwitchTiming::Trapezoid},
    {"beginning", SwitchTiming::BeginningFreeze},
    {"end", SwitchTiming::EndOfStep}};
inline const std::initializer_list<std::pair<const char*, RateRule>> kRateRules{
    {"trapezoid", RateRule::Trapezoid}, {"left", RateRule::LeftPoint}};
inline const std::initializer_list<std::pair<const char*, Estimator>> kEstimators{
    {"control", Estimator::ControlVariate}, {"plain", Estimator::Plain}};

}  // namespace detail

/// Applies one key of one section. Rates given in bp are converted here.
inline void apply_key(RunConfig& c, const std::string& section, const std::string& key,
                      const std::string& v) {
  using namespace detail;
  const std::string k = section + "." + key;
  auto d = [&] { return to_double(k, v); };
  if (section == "model") {
    if (key == "kind") c.model.kind = pick(k, v, kKinds);
    else if (key == "a") c.model.mixed.a = d();
    else if (key == "theta") c.model.mixed.theta = d();
    else if (key == "sigma2") c.model.mixed.sigma2 = d();
    else if (key == "rho0") c.model.mixed.rho0 = c.model.bk.rho0 = d();
    else if (key == "mixed_rho0") c.model.mixed.rho0 = d();
    else if (key == "bk_rho0") c.model.bk.rho0 = d();
    else if (key == "kappa") c.model.bk.kappa = d();
    else if (key == "mu") c.model.bk.mu = d();
    else if (key == "sigma") c.model.bk.sigma = d();
    else if (key == "mu_space") c.model.bk.convention = pick(k, v, kLevels);
    else if (key == "calibrate") c.model.calibrate = pick(k, v, kCalibrations);
    else if (key == "target_libor_bp") c.model.target.libor_3m = bp(d());
    else if (key == "target_tenor") c.model.target.tenor = d();
    else if (key == "target_swap_bp") c.model.target.par_swap_rate = bp(d());
    else if (key == "target_cap_bp") c.model.target.atm_cap_yield_bp = d();
    else throw ConfigError("unknown key " + k);
  } else if (section == "curves") {
    if (key == "libor_ois_bp") c.curves.libor_ois_spread = bp(d());
    else if (key == "b_cds_bp") c.curves.b_cds = bp(d());
    else if (key == "b_basis_bp") c.curves.b_basis = bp(d());
    else if (key == "c_cds_bp") c.curves.c_cds = bp(d());
    else if (key == "c_basis_bp") c.curves.c_basis = bp(d());
    else throw ConfigError("unknown key " + k);
  } else if (section == "instrument") {
    auto& s = c.instrument.swap;
    if (key == "tenor") s.tenor = d();
    else if (key == "frequency") s.frequency = static_cast<int>(to_long(k, v));
    else if (key == "accrual") s.daycount_fraction = d();
    else if (key == "direction") s.direction = pick(k, v, kDirections);
    else if (key == "notional") s.notional = d();
    else if (key == "fixed_rate_bp") {
      if (lower(v) == "atm") {
        c.instrument.atm = true;
      } else {
        c.instrument.atm = false;
        s.fixed_rate = bp(d());
      }
    } else throw ConfigError("unknown key " + k);
  } else if (section == "engine") {
    auto& m = c.engine.mc;
    auto& f = c.engine.fd;
    if (key == "engine") {
      const std::string e = lower(v);
      if (e != "fd" && e != "lsmc" && e != "naive" && e != "both") {
        throw ConfigError(k + ": expected fd|lsmc|naive|both, got '" + v + "'");
      }
      c.engine.engine = e;
    } else if (key == "n_paths") m.n_paths = to_long(k, v);
    else if (key == "dt") m.dt = f.dt = d();
    else if (key == "seed") m.seed = static_cast<std::uint64_t>(to_long(k, v));
    else if (key == "antithetic") m.antithetic = to_bool(k, v);
    else if (key == "basis") m.basis = pick(k, v, kBases);
    else if (key == "basis_order") m.basis_order = static_cast<int>(to_long(k, v));
    else if (key == "regressor") m.regressor = pick(k, v, kRegressors);
    else if (key == "switch_timing") m.timing = pick(k, v, kTimings);
    else if (key == "rate_rule") m.rate_rule = pick(k, v, kRateRules);
    else if (key == "estimator") m.estimator = pick(k, v, kEstimators);
    else if (key == "block_size") m.block_size = static_cast<int>(to_long(k, v));
    else if (key == "fd_nodes") f.nodes = static_cast<int>(to_long(k, v));
    else if (key == "fd_half_width") f.half_width_std = d();
    else if (key == "fd_aux_nodes") f.aux_nodes = static_cast<int>(to_long(k, v));
    else if (key == "fd_max_switch_iterations") f.max_switch_iterations = static_cast<int>(to_long(k, v));
    else if (key == "fd_rannacher") f.rannacher = to_bool(k, v);
    else if (key == "workers") m.workers = f.workers = static_cast<int>(to_long(k, v));
    else throw ConfigError("unknown key " + k);
  } else if (section == "xva") {
    if (key == "c_spreads_bp") c.xva.c_spread_bp = to_list(k, v);
    else if (key == "c_basis_bp") c.xva.c_basis_bp = to_list(k, v);
    else if (key == "labels") c.xva.labels = to_words(v);
    else if (key == "b_cds_bp") c.xva.b_cds_bp = d();
    else if (key == "b_basis_bp") c.xva.b_basis_bp = d();
    else if (key == "exposure") c.xva.exposure = to_bool(k, v);
    else throw ConfigError("unknown key " + k);
  } else if (section == "figures") {
    if (key == "max_spread_bp") c.figures.max_spread_bp = d();
    else if (key == "step_bp") c.figures.step_bp = d();
    else if (key == "tenor") c.figures.tenor = d();
    else if (key == "itm_strike_bp") c.figures.itm_strike_bp = d();
    else if (key == "otm_strike_bp") c.figures.otm_strike_bp = d();
    else if (key == "bump_bp") c.figures.bump_bp = d();
    else throw ConfigError("unknown key " + k);
  } else if (section == "tables") {
    if (key == "calibrate") c.tables.calibrate = to_bool(k, v);
    else if (key == "two_flow_gap") c.tables.two_flow_gap = d();
    else throw ConfigError("unknown key " + k);
  } else if (section == "output") {
    if (key == "dir") c.output.dir = v;
    else if (key == "raw_npv") c.output.raw_npv = to_bool(k, v);
    else throw ConfigError("unknown key " + k);
  } else {
    throw ConfigError("unknown section [" + section + "]");
  }
}

/// Parses the text of a config file. Blank lines and lines starting with '#'
/// or ';' are ignored; trailing '#' comments are stripped.
inline RunConfig parse_config(std::istream& in) {
  RunConfig c;
  std::string line, section;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty() || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(no) + ": bad section header");
      section = detail::lower(detail::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(no) + ": expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(no) + ": key outside a section");
    const std::string key = detail::lower(detail::trim(line.substr(0, eq)));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError("line " + std::to_string(no) + ": empty value for " + key);
    try {
      apply_key(c, section, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(no) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in);
}

inline void RunConfig::validate() const {
  if (engine.mc.n_paths < 2) throw ConfigError("engine.n_paths must be >= 2");
  if (!(engine.mc.dt > 0.0)) throw ConfigError("engine.dt must be positive");
  if (engine.mc.antithetic && engine.mc.n_paths % 2) throw ConfigError("antithetic needs even n_paths");
  if (engine.mc.basis_order < 1) throw ConfigError("engine.basis_order must be >= 1");
  if (engine.mc.workers < 1) throw ConfigError("engine.workers must be >= 1");
  if (engine.fd.nodes < 8) throw ConfigError("engine.fd_nodes must be >= 8");
  if (xva.c_spread_bp.size() != xva.c_basis_bp.size()) {
    throw ConfigError("xva.c_spreads_bp and xva.c_basis_bp differ in length");
  }
  if (!xva.labels.empty() && xva.labels.size() != xva.c_spread_bp.size()) {
    throw ConfigError("xva.labels must match xva.c_spreads_bp in length");
  }
  if (!(figures.step_bp > 0.0) || figures.max_spread_bp < 0.0) {
    throw ConfigError("figures needs step_bp > 0 and max_spread_bp >= 0");
  }
  if (!(tables.two_flow_gap > 0.0)) throw ConfigError("tables.two_flow_gap must be positive");
  try {
    (void)instrument.swap.periods();
    (void)model.start();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  curves.validate();
}

inline std::vector<std::string> RunConfig::echo() const {
  using namespace detail;
  std::vector<std::string> o;
  auto add = [&](const std::string& k, const std::string& v) { o.push_back(k + " = " + v); };
  add("model.kind", name_of(model.kind, kKinds));
  add("model.a", fmt(model.mixed.a));
  add("model.theta", fmt(model.mixed.theta));
  add("model.sigma2", fmt(model.mixed.sigma2));
  add("model.mixed_rho0", fmt(model.mixed.rho0));
  add("model.kappa", fmt(model.bk.kappa));
  add("model.mu", fmt(model.bk.mu));
  add("model.sigma", fmt(model.bk.sigma));
  add("model.bk_rho0", fmt(model.bk.rho0));
  add("model.mu_space", name_of(model.bk.convention, kLevels));
  add("model.calibrate", name_of(model.calibrate, kCalibrations));
  add("model.target_libor_bp", fmt(model.target.libor_3m * 1e4));
  add("model.target_tenor", fmt(model.target.tenor));
  add("model.target_swap_bp", fmt(model.target.par_swap_rate * 1e4));
  add("model.target_cap_bp", fmt(model.target.atm_cap_yield_bp));
  add("curves.libor_ois_bp", fmt(curves.libor_ois_spread * 1e4));
  add("curves.b_cds_bp", fmt(curves.b_cds * 1e4));
  add("curves.b_basis_bp", fmt(curves.b_basis * 1e4));
  add("curves.c_cds_bp", fmt(curves.c_cds * 1e4));
  add("curves.c_basis_bp", fmt(curves.c_basis * 1e4));
  const auto& s = instrument.swap;
  add("instrument.tenor", fmt(s.tenor));
  add("instrument.frequency", std::to_string(s.frequency));
  add("instrument.accrual", fmt(s.daycount_fraction));
  add("instrument.direction", name_of(s.direction, kDirections));
  add("instrument.notional", fmt(s.notional));
  add("instrument.fixed_rate_bp", instrument.atm ? "atm" : fmt(s.fixed_rate * 1e4));
  const auto& m = engine.mc;
  const auto& f = engine.fd;
  add("engine.engine", engine.engine);
  add("engine.n_paths", std::to_string(m.n_paths));
  add("engine.dt", fmt(m.dt));
  add("engine.seed", std::to_string(m.seed));
  add("engine.antithetic", m.antithetic ? "true" : "false");
  add("engine.basis", name_of(m.basis, kBases));
  add("engine.basis_order", std::to_string(m.basis_order));
  add("engine.regressor", name_of(m.regressor, kRegressors));
  add("engine.switch_timing", name_of(m.timing, kTimings));
  add("engine.rate_rule", name_of(m.rate_rule, kRateRules));
  add("engine.estimator", name_of(m.estimator, kEstimators));
  add("engine.block_size", std::to_string(m.block_size));
  add("engine.fd_nodes", std::to_string(f.nodes));
  add("engine.fd_half_width", fmt(f.half_width_std));
  add("engine.fd_aux_nodes", std::to_string(f.aux_nodes));
  add("engine.fd_max_switch_iterations", std::to_string(f.max_switch_iterations));
  add("engine.fd_rannacher", f.rannacher ? "true" : "false");
  add("xva.c_spreads_bp", join(xva.c_spread_bp));
  add("xva.c_basis_bp", join(xva.c_basis_bp));
  add("xva.labels", join(xva.labels));
  add("xva.b_cds_bp", fmt(xva.b_cds_bp));
  add("xva.b_basis_bp", fmt(xva.b_basis_bp));
  add("xva.exposure", xva.exposure ? "true" : "false");
  add("figures.max_spread_bp", fmt(figures.max_spread_bp));
  add("figures.step_bp", fmt(figures.step_bp));
  add("figures.tenor", fmt(figures.tenor));
  add("figures.itm_strike_bp", fmt(figures.itm_strike_bp));
  add("figures.otm_strike_bp", fmt(figures.otm_strike_bp));
  add("figures.bump_bp", fmt(figures.bump_bp));
  add("tables.calibrate", tables.calibrate ? "true" : "false");
  add("tables.two_flow_gap", fmt(tables.two_flow_gap));
  add("output.raw_npv", output.raw_npv ? "true" : "false");
  return o;
}

}  // namespace lsp
