#include <gtest/gtest.h>

#include <sstream>

#include "nekh/config.hpp"

using namespace nekh;

namespace {

ScenarioConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

const std::string kBase = R"(
[system]
n = 2
hessian = 1 0 ; 0 2
rho = 1
sigma = 0.5
action_lo = 0 0
action_hi = 1 1
[perturbation]
modes = 1 0 : 0.1 ; 1 1 : 0.2 -0.1 : 1 0
[run]
eps = 1e-5
initial = 0.5 0.5 0 0
)";

}  // namespace

TEST(Config, ShippedScenario) {
  ScenarioConfig cfg = load_scenario(std::string(NEKH_SOURCE_DIR) + "/configs/convex2d.ini");
  EXPECT_EQ(cfg.name, "convex2d");
  EXPECT_EQ(cfg.spec.n, 2);
  EXPECT_EQ(cfg.spec.m, 0);
  EXPECT_EQ(cfg.regime, Regime::local);
  ASSERT_TRUE(cfg.rho_split.has_value());
  EXPECT_NEAR(cfg.rho_split->sum(), cfg.spec.rho, 1e-12);
  EXPECT_EQ(cfg.initial.size(), 2u);
  EXPECT_EQ(cfg.h1.terms().size(), 3u);
  // Hessian eigenvalues 0.8 and 1.2
  EXPECT_NEAR(cfg.spec.convexity.m_minus, 0.8, 1e-12);
  EXPECT_NEAR(cfg.spec.convexity.m_plus, 1.2, 1e-12);
  EXPECT_EQ(static_cast<long>(cfg.horizon / cfg.dt), 10000000);
  RVec w = cfg.spec.h0.gradient(cfg.initial[0].I);
  EXPECT_NEAR(w[0], 1.0, 1e-15);
  EXPECT_NEAR(w[1], 0.6, 1e-15);
}

TEST(Config, Defaults) {
  ScenarioConfig cfg = parse(kBase);
  EXPECT_EQ(cfg.name, "scenario");
  EXPECT_EQ(cfg.regime, Regime::global);
  EXPECT_EQ(cfg.pivot, Pivot::FirstMax);
  EXPECT_FALSE(cfg.rho_split.has_value());
  EXPECT_EQ(cfg.slow_points, 5);
  EXPECT_EQ(cfg.max_steps, 10000000);
  EXPECT_DOUBLE_EQ(cfg.dt, 0.01);
  const auto& t = cfg.h1.terms();
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[1].amp, cplx(0.2, -0.1));
  EXPECT_EQ(t[1].slow_exp, (std::vector<int>{1, 0}));
  EXPECT_NEAR(cfg.spec.convexity.m_plus, 2.0, 1e-12);
}

TEST(Config, PerturbationSampleIsReal) {
  ScenarioConfig cfg = parse(kBase);
  const auto& f = cfg.spec.perturbation;
  for (const auto& [k, c] : f.modes) {
    IVec mk{-k[0], -k[1]};
    ASSERT_TRUE(f.modes.count(mk));
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c[i], std::conj(f.modes.at(mk)[i]));
  }
}

TEST(Config, Errors) {
  auto replace = [](std::string s, const std::string& from, const std::string& to) {
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  EXPECT_THROW(parse(replace(kBase, "1 0 ; 0 2", "1 0.5 ; 0 2")), std::invalid_argument);
  EXPECT_THROW(parse(replace(kBase, "1 0 ; 0 2", "1 0")), std::invalid_argument);
  EXPECT_THROW(parse(replace(kBase, "0.5 0.5 0 0", "0.5 0.5 0")), std::invalid_argument);
  EXPECT_THROW(parse(replace(kBase, "0.5 0.5 0 0", "3 0.5 0 0")), std::invalid_argument);
  EXPECT_THROW(parse(replace(kBase, "1 0 : 0.1 ;", "1 x : 0.1 ;")), std::invalid_argument);
  EXPECT_THROW(parse(replace(kBase, "eps = 1e-5", "eps = 1e-5\nregime = sideways")), std::invalid_argument);
  EXPECT_THROW(parse(replace(kBase, "eps = 1e-5", "eps = 1e-5\npivot = last")), std::invalid_argument);
  EXPECT_THROW(parse(replace(kBase, "1 0 ; 0 2", "1 0 ; 0 -2")), std::runtime_error);
  EXPECT_THROW(load_scenario("/nonexistent/file.ini"), std::invalid_argument);
}
