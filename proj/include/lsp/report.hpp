#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lsp/analytics.hpp"
#include "lsp/config.hpp"
#include "lsp/fd_solver.hpp"
#include "lsp/instruments.hpp"
#include "lsp/lsmc.hpp"
#include "lsp/rate_model.hpp"
#include "lsp/xva.hpp"

namespace lsp {

/// A CSV table: '#' comment lines, one header row, then data rows.
struct Csv {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
  }

  std::string str() const {
    std::string out;
    for (const auto& c : comments) out += "# " + c + "\n";
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

/// Model after optional calibration, with a line describing what was done.
struct ResolvedModel {
  ShortRateModel model;
  std::string note;
};

inline ResolvedModel resolve_model(const ShortRateModel& start, Calibration how,
                                   const CalibrationTarget& custom, const FdSettings& fd) {
  if (how == Calibration::None) return {start, "model " + start.describe() + " (not calibrated)"};
  const CalibrationTarget t = how == Calibration::FiveYear  ? CalibrationTarget::five_year()
                              : how == Calibration::TenYear ? CalibrationTarget::ten_year()
                                                            : custom;
  const CalibrationResult r = calibrate(start, t, fd);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                " calibrated to %gy: residuals LIBOR %.4g bp, swap %.4g bp, cap %.4g bp",
                t.tenor, r.residual_bp[0], r.residual_bp[1], r.residual_bp[2]);
  return {r.model, "model " + r.model.describe() + buf};
}

inline ResolvedModel resolve_model(const RunConfig& cfg) {
  return resolve_model(cfg.model.start(), cfg.model.calibrate, cfg.model.target, cfg.engine.fd);
}

/// Swap of the config with the fixed rate set to risk-free par when ATM.
inline SwapSpec resolve_swap(const FdEngine& fd, const InstrumentConfig& ic) {
  SwapSpec s = ic.swap;
  if (ic.atm) s.fixed_rate = risk_free_par(fd, s);
  return s;
}

inline std::vector<std::string> header_lines(const RunConfig& cfg, const std::string& what) {
  std::vector<std::string> out{"lsp-xva " + what};
  for (const auto& l : cfg.echo()) out.push_back(l);
  return out;
}

/// Regression price, naive price and FD price of one setup.
struct EngineResult {
  std::string engine;
  double npv = 0.0;
  double std_err = 0.0;
};

inline std::vector<EngineResult> price_engines(const FdEngine& fd, const PathSet* paths,
                                               const CurveSet& curves, std::span<const CashflowEvent> pf,
                                               const std::string& engine, const McSettings& mc,
                                               DiscountRole role = DiscountRole::full()) {
  std::vector<EngineResult> out;
  if (engine == "fd" || engine == "both") out.push_back({"FD", fd.price(curves, role, pf).npv, 0.0});
  if (engine == "lsmc" || engine == "both" || engine == "naive") {
    if (!paths) throw std::invalid_argument("Monte Carlo engine needs paths");
    const BondCurve bonds = bond_curve(fd, pf);
    InductionRequest req;
    req.bonds = &bonds;
    if (engine != "naive") {
      const auto r = backward_induct(*paths, fd.libor(), pf, curves, role, mc, req);
      out.push_back({"LSMC", r.price.npv, r.price.std_err});
    }
    if (engine == "naive" || engine == "both") {
      const auto r = backward_induct_naive(*paths, fd.libor(), pf, curves, role, mc, req);
      out.push_back({"naive", r.price.npv, r.price.std_err});
    }
  }
  return out;
}

inline PathSet paths_for(const ShortRateModel& m, double horizon, const McSettings& mc) {
  return simulate_paths(m, mc.n_paths, horizon, mc.dt, mc.seed, mc.antithetic, mc.workers);
}

// ---------------------------------------------------------------- price

inline Csv price_report(const RunConfig& cfg) {
  const ResolvedModel rm = resolve_model(cfg);
  const FdEngine fd(rm.model, cfg.engine.fd);
  const SwapSpec s = resolve_swap(fd, cfg.instrument);
  const Portfolio pf = schedule(s);
  const double a = annuity(fd, s);
  std::optional<PathSet> paths;
  if (cfg.engine.engine != "fd") paths = paths_for(rm.model, s.tenor, cfg.engine.mc);
  const auto res = price_engines(fd, paths ? &*paths : nullptr, cfg.curves, pf, cfg.engine.engine,
                                 cfg.engine.mc);
  Csv csv;
  csv.comments = header_lines(cfg, "price");
  csv.comments.push_back(rm.note);
  csv.comments.push_back("fixed_rate_bp = " + Csv::num(s.fixed_rate * 1e4));
  csv.header = {"engine", "yield_bp", "std_err_bp", "npv", "npv_std_err"};
  for (const auto& r : res) {
    csv.rows.push_back({r.engine, Csv::num(yield_value(r.npv, s.notional, a)),
                        Csv::num(yield_value(r.std_err, s.notional, a)), Csv::num(r.npv),
                        Csv::num(r.std_err)});
  }
  return csv;
}

// ---------------------------------------------------------------- xva

/// One ladder row of C's credit: total spread over LIBOR and its basis part.
struct LadderRow {
  std::string label;
  double c_spread_bp;
  double c_basis_bp;
};

inline std::vector<LadderRow> ladder(const XvaConfig& x) {
  std::vector<LadderRow> out;
  for (std::size_t i = 0; i < x.c_spread_bp.size(); ++i) {
    out.push_back({x.labels.empty() ? std::string("row") + std::to_string(i + 1) : x.labels[i],
                   x.c_spread_bp[i], x.c_basis_bp[i]});
  }
  return out;
}

inline CurveSet ladder_curves(const XvaConfig& x, const LadderRow& row, double libor_ois) {
  CurveSet c;
  c.libor_ois_spread = libor_ois;
  c.b_cds = bp(x.b_cds_bp);
  c.b_basis = bp(x.b_basis_bp);
  c.c_basis = bp(row.c_basis_bp);
  c.c_cds = bp(row.c_spread_bp - row.c_basis_bp);
  return c;
}

/// Adjustment table for a ladder of counterparties, in yield bp. With the
/// regression engine every row is priced on the same paths.
inline Csv xva_table(const FdEngine& fd, const SwapSpec& s, const XvaConfig& x, double libor_ois,
                     const std::string& engine, const McSettings& mc,
                     std::vector<XvaReport>* reports = nullptr) {
  const Portfolio pf = schedule(s);
  const double a = annuity(fd, s);
  const double scale = 1e4 / (a * s.notional);
  Csv csv;
  csv.header = {"c_libor_bp", "rating", "engine", "npv", "cra", "cva", "dva", "cfa", "dfa",
                "npv_se", "cra_se", "cva_se", "dva_se", "cfa_se", "dfa_se", "cra_integral",
                "cra_integral_se"};
  if (x.exposure && engine != "fd") {
    for (const char* h : {"epe_cva", "epe_dva", "epe_cfa", "epe_dfa"}) csv.header.push_back(h);
  }
  std::optional<PathSet> paths;
  std::optional<BondCurve> bonds;
  std::optional<ExposureProfile> profile;
  if (engine != "fd") {
    paths = paths_for(fd.model(), s.tenor, mc);
    bonds = bond_curve(fd, pf);
    if (x.exposure) profile = exposure_profile(*paths, fd.libor(), pf, mc);
  }
  for (const auto& row : ladder(x)) {
    const CurveSet c = ladder_curves(x, row, libor_ois);
    auto emit = [&](const XvaReport& r0, std::optional<McPrice> integral) {
      const XvaReport r = r0.scaled(scale);
      std::vector<std::string> cells{Csv::num(row.c_spread_bp), row.label, r.engine};
      for (const Estimate* e : {&r.npv, &r.cra, &r.cva, &r.dva, &r.cfa, &r.dfa}) {
        cells.push_back(Csv::num(e->value));
      }
      for (const Estimate* e : {&r.npv, &r.cra, &r.cva, &r.dva, &r.cfa, &r.dfa}) {
        cells.push_back(Csv::num(e->std_err));
      }
      cells.push_back(integral ? Csv::num(integral->npv * scale) : "");
      cells.push_back(integral ? Csv::num(integral->std_err * scale) : "");
      if (profile) {
        if (r.engine == "FD") {
          for (int i = 0; i < 4; ++i) cells.push_back("");
        } else {
          const ExposureXva ex = xva_from_exposure(*profile, c);
          for (double v : {ex.cva, ex.dva, ex.cfa, ex.dfa}) cells.push_back(Csv::num(v * scale));
        }
      }
      csv.rows.push_back(cells);
      if (reports) reports->push_back(r);
    };
    if (engine == "fd" || engine == "both") emit(fd_xva(fd, c, pf), std::nullopt);
    if (engine != "fd") {
      InductionRequest req;
      req.bonds = &*bonds;
      req.cra = true;
      const auto res = multi_role_induct(*paths, fd.libor(), pf, c, kDecompositionChain, mc, req);
      emit(decompose(res), *res.roles.back().cra);
    }
  }
  return csv;
}

inline Csv xva_report(const RunConfig& cfg) {
  const ResolvedModel rm = resolve_model(cfg);
  const FdEngine fd(rm.model, cfg.engine.fd);
  const SwapSpec s = resolve_swap(fd, cfg.instrument);
  const std::string engine = cfg.engine.engine == "naive" ? "lsmc" : cfg.engine.engine;
  Csv csv = xva_table(fd, s, cfg.xva, cfg.curves.libor_ois_spread, engine, cfg.engine.mc);
  csv.comments = header_lines(cfg, "xva");
  csv.comments.push_back(rm.note);
  csv.comments.push_back("fixed_rate_bp = " + Csv::num(s.fixed_rate * 1e4));
  return csv;
}

// ---------------------------------------------------------------- figures

inline std::vector<double> spread_grid(const FigureConfig& f) {
  std::vector<double> out;
  const long n = std::lround(std::floor(f.max_spread_bp / f.step_bp + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(static_cast<double>(i) * f.step_bp);
  return out;
}

/// Bid/ask and hedge ratios against C's spread over LIBOR, B at LIBOR flat.
inline std::pair<Csv, Csv> figure_tables(const FdEngine& fd, const FigureConfig& f,
                                         double libor_ois) {
  SwapSpec atm;
  atm.tenor = f.tenor;
  atm.fixed_rate = risk_free_par(fd, atm);
  const double a = annuity(fd, atm);
  SwapSpec itm = atm;
  itm.fixed_rate = bp(f.itm_strike_bp);
  itm.direction = Direction::Receiver;
  SwapSpec otm = atm;
  otm.fixed_rate = bp(f.otm_strike_bp);
  Csv f1, f2;
  f1.header = {"c_spread_bp", "bid_bp", "ask_bp", "bid_ask_spread_bp", "engine"};
  f2.header = {"c_spread_bp", "delta_atm", "delta_itm", "delta_otm", "engine"};
  double guess = atm.fixed_rate;
  for (double sp : spread_grid(f)) {
    CurveSet c;
    c.libor_ois_spread = libor_ois;
    c.c_cds = bp(sp);
    const BidAsk q = bid_ask(fd_pricer(fd, c, DiscountRole::full()), atm, a, guess);
    guess = q.bid;
    f1.rows.push_back({Csv::num(sp), Csv::num(q.bid * 1e4), Csv::num(q.ask * 1e4),
                       Csv::num(q.spread_bp()), "FD"});
    std::vector<std::string> cells{Csv::num(sp)};
    for (const SwapSpec* s : {&atm, &itm, &otm}) {
      const HedgeReport h = fd_hedge_ratio(fd, c, *s, DiscountRole::full(), bp(f.bump_bp), false);
      cells.push_back(h.defined ? Csv::num(h.delta) : "nan");
    }
    cells.push_back("FD");
    f2.rows.push_back(cells);
  }
  return {f1, f2};
}

// ---------------------------------------------------------------- tables

/// Models of the replication bundle, calibrated once per run.
class TableModels {
 public:
  explicit TableModels(const RunConfig& cfg) : cfg_(cfg) {}

  const ResolvedModel& get(ModelKind kind, Calibration tenor) {
    const auto key = std::make_pair(static_cast<int>(kind), static_cast<int>(tenor));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const ShortRateModel start = kind == ModelKind::Mixed
                                     ? ShortRateModel::mixed(cfg_.model.mixed)
                                     : ShortRateModel::black_karasinski(cfg_.model.bk);
    ResolvedModel r = resolve_model(start, cfg_.tables.calibrate ? tenor : Calibration::None,
                                    cfg_.model.target, cfg_.engine.fd);
    return cache_.emplace(key, std::move(r)).first->second;
  }

  std::vector<std::string> notes() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : cache_) out.push_back(v.note);
    return out;
  }

 private:
  const RunConfig& cfg_;
  std::map<std::pair<int, int>, ResolvedModel> cache_;
};

/// B at the risk-free rate, C at a spread over it.
inline CurveSet curves_b_risk_free(double c_over_ois_bp, double libor_ois) {
  CurveSet c;
  c.libor_ois_spread = libor_ois;
  c.b_cds = -libor_ois;
  c.c_cds = bp(c_over_ois_bp) - libor_ois;
  return c;
}

/// B at LIBOR flat, C at a spread over LIBOR.
inline CurveSet curves_b_libor_flat(double c_spread_bp, double libor_ois) {
  CurveSet c;
  c.libor_ois_spread = libor_ois;
  c.c_cds = bp(c_spread_bp);
  return c;
}

struct Table1Row {
  std::string model;
  double c_spread_bp;
  double fd;
  double lsmc;
  double lsmc_se;
  double naive;
  double naive_se;
};

/// 10y ATM swap, B at LIBOR flat: FD against regression and naive simulation.
inline std::vector<Table1Row> table1_rows(TableModels& models, const RunConfig& cfg,
                                          std::initializer_list<double> spreads = {1000, 500, 250}) {
  std::vector<Table1Row> out;
  for (ModelKind kind : {ModelKind::BlackKarasinski, ModelKind::Mixed}) {
    const ShortRateModel& m = models.get(kind, Calibration::TenYear).model;
    const FdEngine fd(m, cfg.engine.fd);
    SwapSpec s;
    s.tenor = 10;
    s.fixed_rate = risk_free_par(fd, s);
    const double a = annuity(fd, s);
    const Portfolio pf = schedule(s);
    const PathSet paths = paths_for(m, s.tenor, cfg.engine.mc);
    for (double sp : spreads) {
      const CurveSet c = curves_b_libor_flat(sp, cfg.curves.libor_ois_spread);
      const auto r = price_engines(fd, &paths, c, pf, "both", cfg.engine.mc);
      auto y = [&](double v) { return yield_value(v, 1.0, a); };
      out.push_back({kind == ModelKind::Mixed ? "mixed" : "bk", sp, y(r[0].npv), y(r[1].npv),
                     y(r[1].std_err), y(r[2].npv), y(r[2].std_err)});
    }
  }
  return out;
}

inline Csv table1_csv(const std::vector<Table1Row>& rows) {
  Csv csv;
  csv.header = {"model", "c_spread_bp", "fd", "lsmc", "lsmc_se", "naive", "naive_se", "diff"};
  for (const auto& r : rows) {
    csv.rows.push_back({r.model, Csv::num(r.c_spread_bp), Csv::num(r.fd), Csv::num(r.lsmc),
                        Csv::num(r.lsmc_se), Csv::num(r.naive), Csv::num(r.naive_se),
                        Csv::num(r.lsmc - r.fd)});
  }
  return csv;
}

struct NettingRow {
  double c_spread_bp;
  double swap;      // LSP value of the whole swap
  double synthetic; // asset leg + liability leg
  double asset;
  double liability;
  double diff;      // swap - synthetic
};

/// Swap against its cap/floor split discounted leg by leg, B at the
/// risk-free rate, FD, in yield bp.
inline std::vector<NettingRow> netting_rows(const FdEngine& fd, const SwapSpec& s, double libor_ois,
                                            std::initializer_list<double> spreads = {0, 125, 250, 500, 1000, 2000}) {
  const double a = annuity(fd, s);
  std::vector<NettingRow> out;
  for (double sp : spreads) {
    const HubnerReport h = hubner_price(fd, curves_b_risk_free(sp, libor_ois), schedule(s));
    auto y = [&](double v) { return yield_value(v, s.notional, a); };
    out.push_back({sp, y(h.lsp), y(h.hubner), y(h.asset_leg), y(h.liability_leg), y(h.diff)});
  }
  return out;
}

inline Csv table2_csv(const std::vector<NettingRow>& rows) {
  Csv csv;
  csv.header = {"c_spread_bp", "swap_yld", "cap_minus_floor", "cap_yld", "floor_yld", "diff"};
  for (const auto& r : rows) {
    csv.rows.push_back({Csv::num(r.c_spread_bp), Csv::num(r.swap), Csv::num(r.synthetic),
                        Csv::num(r.asset), Csv::num(r.liability), Csv::num(r.diff)});
  }
  return csv;
}

/// Receiver: the asset leg is the floor and the liability leg the short cap.
inline Csv table3_csv(const std::vector<NettingRow>& rows) {
  Csv csv;
  csv.header = {"c_spread_bp", "swap_yld", "floor_minus_cap", "cap_yld", "floor_yld", "diff"};
  for (const auto& r : rows) {
    csv.rows.push_back({Csv::num(r.c_spread_bp), Csv::num(r.swap), Csv::num(r.synthetic),
                        Csv::num(r.liability), Csv::num(r.asset), Csv::num(r.diff)});
  }
  return csv;
}

struct TwoFlowRow {
  double c_spread_bp;
  double gap;
  double hubner;  // fraction of notional
  double lsp;
};

/// Pay 1 at T - gap, receive 1 at T; B at LIBOR flat, C wider by the spread.
inline std::vector<TwoFlowRow> two_flow_rows(const FdEngine& fd, double maturity,
                                              std::initializer_list<double> spreads,
                                              const std::vector<double>& gaps, double libor_ois) {
  std::vector<TwoFlowRow> out;
  for (double sp : spreads) {
    for (double g : gaps) {
      const HubnerReport h = hubner_price(fd, curves_b_libor_flat(sp, libor_ois),
                                          offsetting_pair(maturity - g, maturity));
      out.push_back({sp, g, h.hubner, h.lsp});
    }
  }
  return out;
}

inline Csv two_flow_csv(const std::vector<TwoFlowRow>& rows) {
  Csv csv;
  csv.header = {"c_spread_bp", "gap_years", "hubner_pct", "lsp_pct"};
  for (const auto& r : rows) {
    csv.rows.push_back({Csv::num(r.c_spread_bp), Csv::num(r.gap), Csv::num(r.hubner * 100),
                        Csv::num(r.lsp * 100)});
  }
  return csv;
}

/// Files of the replication bundle, name -> content.
inline std::vector<std::pair<std::string, std::string>> tables_bundle(const RunConfig& cfg) {
  TableModels models(cfg);
  const double lo = cfg.curves.libor_ois_spread;
  const auto head = header_lines(cfg, "tables");
  std::vector<std::pair<std::string, std::string>> files;
  auto add = [&](const std::string& name, Csv csv, const std::vector<std::string>& notes) {
    csv.comments = head;
    csv.comments.insert(csv.comments.end(), notes.begin(), notes.end());
    files.emplace_back(name, csv.str());
  };

  // Table 1.
  const auto t1 = table1_rows(models, cfg);
  add("table1.csv", table1_csv(t1),
      {models.get(ModelKind::BlackKarasinski, Calibration::TenYear).note,
       models.get(ModelKind::Mixed, Calibration::TenYear).note,
       "10y ATM payer, B at LIBOR flat, yield bp"});

  // Tables 2 and 3.
  const ResolvedModel& mixed5 = models.get(ModelKind::Mixed, Calibration::FiveYear);
  const FdEngine fd_m5(mixed5.model, cfg.engine.fd);
  SwapSpec atm5;
  atm5.tenor = 5;
  atm5.fixed_rate = risk_free_par(fd_m5, atm5);
  const auto t2 = netting_rows(fd_m5, atm5, lo);
  add("table2.csv", table2_csv(t2),
      {mixed5.note, "5y ATM payer at " + Csv::num(atm5.fixed_rate * 1e4) +
                        "bp, B at the risk-free rate, C spread over it, FD, yield bp"});

  const ResolvedModel& bk5 = models.get(ModelKind::BlackKarasinski, Calibration::FiveYear);
  const FdEngine fd_b5(bk5.model, cfg.engine.fd);
  SwapSpec itm5;
  itm5.tenor = 5;
  itm5.fixed_rate = 0.05;
  itm5.direction = Direction::Receiver;
  const auto t3 = netting_rows(fd_b5, itm5, lo);
  add("table3.csv", table3_csv(t3),
      {bk5.note, "5y receiver at 500bp, B at the risk-free rate, C spread over it, FD, yield bp"});

  // Tables 4 and 5.
  const ResolvedModel& mixed10 = models.get(ModelKind::Mixed, Calibration::TenYear);
  const FdEngine fd_m10(mixed10.model, cfg.engine.fd);
  SwapSpec atm10;
  atm10.tenor = 10;
  atm10.fixed_rate = risk_free_par(fd_m10, atm10);
  std::vector<XvaReport> r4, r5;
  add("table4.csv", xva_table(fd_m10, atm10, cfg.xva, lo, "both", cfg.engine.mc, &r4),
      {mixed10.note, "10y ATM payer at " + Csv::num(atm10.fixed_rate * 1e4) + "bp, yield bp"});
  SwapSpec itm10 = atm10;
  itm10.fixed_rate = 0.05;
  itm10.direction = Direction::Receiver;
  add("table5.csv", xva_table(fd_m10, itm10, cfg.xva, lo, "both", cfg.engine.mc, &r5),
      {mixed10.note, "10y receiver at 500bp, yield bp"});

  // Figures.
  FigureConfig f = cfg.figures;
  const auto [f1, f2] = figure_tables(fd_m5, f, lo);
  add("figure1.csv", f1, {mixed5.note, "ATM bid (payer par) and ask (receiver par), B at LIBOR flat"});
  add("figure2.csv", f2, {mixed5.note, "hedge ratio against the CCP swap, B at LIBOR flat"});

  // Two offsetting fixed flows.
  const auto fn = two_flow_rows(fd_b5, 5.0, {125, 250}, {cfg.tables.two_flow_gap, cfg.engine.fd.dt}, lo);
  add("two_flows.csv", two_flow_csv(fn),
      {bk5.note, "pay 1 at T - gap, receive 1 at T = 5y, B at LIBOR flat, percent of notional"});

  // Summary of engine discrepancies.
  Csv sum;
  sum.header = {"check", "value_bp"};
  for (const auto& r : t1) {
    sum.rows.push_back({"table1 " + r.model + " " + Csv::num(r.c_spread_bp) + " |fd-lsmc|",
                        Csv::num(std::abs(r.fd - r.lsmc))});
    sum.rows.push_back({"table1 " + r.model + " " + Csv::num(r.c_spread_bp) + " |fd-naive|",
                        Csv::num(std::abs(r.fd - r.naive))});
  }
  for (const auto& r : t2) {
    sum.rows.push_back({"table2 " + Csv::num(r.c_spread_bp) + " diff", Csv::num(r.diff)});
  }
  const auto rows = ladder(cfg.xva);
  for (auto [name, reps] : {std::pair{"table4", &r4}, std::pair{"table5", &r5}}) {
    // FD and regression rows alternate.
    for (std::size_t i = 0; i + 1 < reps->size() && i / 2 < rows.size(); i += 2) {
      sum.rows.push_back({std::string(name) + " " + rows[i / 2].label + " |fd-lsmc| cra",
                          Csv::num(std::abs((*reps)[i].cra.value - (*reps)[i + 1].cra.value))});
    }
  }
  add("summary.csv", sum, {});

  std::string manifest;
  for (const auto& [name, text] : files) manifest += name + "\n";
  files.emplace_back("manifest.txt", manifest);
  return files;
}

}  // namespace lsp
