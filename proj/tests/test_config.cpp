#include <gtest/gtest.h>

#include <filesystem>

#include "lsp/config.hpp"

using namespace lsp;

TEST(Config, ParsesSectionsAndBasisPoints) {
  const RunConfig c = parse_config_string(R"(
# comment
[model]
kind = bk
sigma = 0.8

[curves]
c_cds_bp = 250
b_basis_bp = 50

[instrument]
tenor = 10
fixed_rate_bp = 172.5
direction = receiver

[engine]
engine = lsmc
n_paths = 2000
seed = 42
)");
  EXPECT_EQ(c.model.kind, ModelKind::BlackKarasinski);
  EXPECT_DOUBLE_EQ(c.model.bk.sigma, 0.8);
  EXPECT_NEAR(c.curves.c_cds, 0.025, 1e-15);
  EXPECT_NEAR(c.curves.b_basis, 0.005, 1e-15);
  EXPECT_DOUBLE_EQ(c.instrument.swap.tenor, 10);
  EXPECT_FALSE(c.instrument.atm);
  EXPECT_NEAR(c.instrument.swap.fixed_rate, 0.01725, 1e-15);
  EXPECT_EQ(c.instrument.swap.direction, Direction::Receiver);
  EXPECT_EQ(c.engine.engine, "lsmc");
  EXPECT_EQ(c.engine.mc.n_paths, 2000);
  EXPECT_EQ(c.engine.mc.seed, 42u);
}

TEST(Config, AtmAndDefaults) {
  const RunConfig c = parse_config_string("[instrument]\nfixed_rate_bp = atm\n");
  EXPECT_TRUE(c.instrument.atm);
  EXPECT_EQ(c.engine.engine, "fd");
  EXPECT_EQ(c.engine.mc.estimator, Estimator::ControlVariate);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config_string("[model]\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_string("[nowhere]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_string("[engine]\nn_paths = many\n"), ConfigError);
  EXPECT_THROW(parse_config_string("[model]\nkind = vasicek\n"), ConfigError);
  EXPECT_THROW(parse_config_string("[engine]\nn_paths = 1\n"), ConfigError);
}

TEST(Config, EchoRoundTrips) {
  const RunConfig c = parse_config_string("[curves]\nc_cds_bp = 125\n[engine]\nseed = 7\n");
  std::string text;
  std::string section;
  for (const auto& line : c.echo()) {
    const auto dot = line.find('.');
    const std::string s = line.substr(0, dot);
    if (s != section) text += "[" + (section = s) + "]\n";
    text += line.substr(dot + 1) + "\n";
  }
  const RunConfig back = parse_config_string(text);
  EXPECT_EQ(back.echo(), c.echo());
}

TEST(Config, ShippedConfigsLoad) {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(LSP_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 5);
}

TEST(Config, MissingFileThrows) {
  EXPECT_THROW(load_config("/nonexistent/run.cfg"), ConfigError);
}
