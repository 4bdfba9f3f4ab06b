#include <sstream>

#include <gtest/gtest.h>

#include "conewidth/config.hpp"

using namespace conewidth;

namespace {

const char* kMinimal =
    "# minimal matched config\n"
    "family=gaussian\n"
    "p=50\n"
    "s=3\n"
    "constraint_mode=matched\n"
    "n_grid=40,80,160\n";

ExperimentConfig parse(const std::string& text, const std::vector<std::string>& overrides = {}) {
  std::istringstream in(text);
  return parse_config(in, overrides);
}

std::string error_key(const std::string& text, const std::vector<std::string>& overrides = {}) {
  try {
    parse(text, overrides);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, MinimalMatchedParses) {
  const auto cfg = parse(kMinimal);
  EXPECT_EQ(cfg.family, FamilyTag::gaussian);
  EXPECT_EQ(cfg.p, 50);
  EXPECT_EQ(cfg.s, 3);
  EXPECT_EQ(cfg.constraint_mode, ConstraintClass::matched);
  EXPECT_EQ(cfg.n_grid, (std::vector<Index>{40, 80, 160}));
}

TEST(Config, CommentsAndWhitespace) {
  const auto cfg = parse(std::string(kMinimal) + "\n   \n  trials = 7   # inline comment\n");
  EXPECT_EQ(cfg.trials, 7u);
}

TEST(Config, Errors) {
  EXPECT_EQ(error_key(std::string(kMinimal) + "slack=0.5\n"), "slack");
  EXPECT_EQ(error_key(std::string(kMinimal) + "p=60\n"), "p");                  // duplicate
  EXPECT_EQ(error_key("family=gaussian\np=50\ns=3\nconstraint_mode=matched\n"), "n_grid");  // missing
  EXPECT_EQ(error_key(std::string(kMinimal) + "bogus_key=1\n"), "bogus_key");
  EXPECT_EQ(error_key(std::string(kMinimal) + "trials=many\n"), "trials");
  EXPECT_EQ(error_key(std::string(kMinimal) + "noise_scale=0.5x\n"), "noise_scale");
  EXPECT_EQ(error_key(std::string(kMinimal) + "family_x\n"), "family_x");
  EXPECT_EQ(error_key(std::string(kMinimal) + "mu_mode=sometimes\n"), "mu_mode");
  EXPECT_EQ(error_key(std::string(kMinimal), {"n_grid=80,40"}), "n_grid");
  EXPECT_EQ(error_key(std::string(kMinimal), {"s=51"}), "s");
  EXPECT_EQ(error_key(std::string(kMinimal), {"nope=3"}), "nope");
}

TEST(Config, OverridesApplyAfterFile) {
  const auto cfg = parse(kMinimal, {"p=60", "constraint_mode=mismatched", "slack=0.25"});
  EXPECT_EQ(cfg.p, 60);
  EXPECT_EQ(cfg.constraint_mode, ConstraintClass::mismatched);
  EXPECT_EQ(cfg.slack, 0.25);
  // Required keys may come from overrides.
  EXPECT_NO_THROW(parse("family=logistic\np=10\ns=2\nconstraint_mode=matched\n", {"n_grid=5,10,20"}));
}

TEST(Config, RoundTrip) {
  ExperimentConfig cfg = parse(kMinimal, {"noise_scale=0.123456789012345678", "t_grid=0.01,0.1,1,3.3333333333333335",
                                          "master_seed=18446744073709551615", "solver=frank_wolfe",
                                          "mu_mode=theoretical", "ensemble=rademacher"});
  const ExperimentConfig back = parse(serialize_config(cfg));
  EXPECT_TRUE(back == cfg);
  EXPECT_EQ(serialize_config(back), serialize_config(cfg));
  const ExperimentConfig defaults = parse(kMinimal);
  EXPECT_TRUE(parse(serialize_config(defaults)) == defaults);
}

TEST(Config, MissingFile) { EXPECT_THROW(load_config("/nonexistent/conewidth.cfg"), Error); }
