// lsp-xva: price, adjustments, figure data and the table bundle from a config.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lsp/report.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

void write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw lsp::ConfigError("cannot write " + (dir / name).string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Liability-side pricing of uncollateralized swaps"};
  std::string command, config_path, engine, out_dir;
  long long seed = -1;
  long paths = -1;
  int workers = -1;
  app.add_option("command", command, "price | xva | figures | tables")
      ->required()
      ->check(CLI::IsMember({"price", "xva", "figures", "tables"}));
  app.add_option("--config", config_path, "config file")->required();
  app.add_option("--engine", engine, "fd | lsmc | naive | both")
      ->check(CLI::IsMember({"fd", "lsmc", "naive", "both"}));
  app.add_option("--seed", seed, "random seed");
  app.add_option("--paths", paths, "number of simulated paths");
  app.add_option("--workers", workers, "worker threads");
  app.add_option("--out", out_dir, "output directory");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    lsp::RunConfig cfg = lsp::load_config(config_path);
    if (!engine.empty()) cfg.engine.engine = engine;
    if (seed >= 0) cfg.engine.mc.seed = static_cast<std::uint64_t>(seed);
    if (paths > 0) cfg.engine.mc.n_paths = paths;
    if (workers > 0) cfg.engine.mc.workers = cfg.engine.fd.workers = workers;
    if (!out_dir.empty()) cfg.output.dir = out_dir;
    cfg.validate();
    const fs::path dir = cfg.output.dir;

    if (command == "price") {
      const lsp::Csv csv = lsp::price_report(cfg);
      write_file(dir, "price.csv", csv.str());
      for (const auto& c : csv.comments) {
        if (c.rfind("model ", 0) == 0 || c.rfind("fixed_rate_bp", 0) == 0) std::printf("%s\n", c.c_str());
      }
      std::printf("%-6s %14s %12s", "engine", "yield_bp", "std_err_bp");
      if (cfg.output.raw_npv) std::printf(" %14s %12s", "npv", "npv_se");
      std::printf("\n");
      for (const auto& r : csv.rows) {
        std::printf("%-6s %14s %12s", r[0].c_str(), r[1].c_str(), r[2].c_str());
        if (cfg.output.raw_npv) std::printf(" %14s %12s", r[3].c_str(), r[4].c_str());
        std::printf("\n");
      }
    } else if (command == "xva") {
      const lsp::Csv csv = lsp::xva_report(cfg);
      write_file(dir, "xva.csv", csv.str());
      std::printf("%s", csv.str().c_str());
    } else if (command == "figures") {
      const lsp::ResolvedModel rm = lsp::resolve_model(cfg);
      const lsp::FdEngine fd(rm.model, cfg.engine.fd);
      auto [f1, f2] = lsp::figure_tables(fd, cfg.figures, cfg.curves.libor_ois_spread);
      for (auto* c : {&f1, &f2}) {
        c->comments = lsp::header_lines(cfg, "figures");
        c->comments.push_back(rm.note);
      }
      write_file(dir, "figure1.csv", f1.str());
      write_file(dir, "figure2.csv", f2.str());
      std::printf("wrote %s and %s\n", (dir / "figure1.csv").c_str(), (dir / "figure2.csv").c_str());
    } else {
      for (const auto& [name, text] : lsp::tables_bundle(cfg)) {
        write_file(dir, name, text);
        std::printf("wrote %s\n", (dir / name).c_str());
      }
    }
  } catch (const lsp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid setup: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumericalError;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("elapsed %.1fs\n", secs);
  return 0;
}
