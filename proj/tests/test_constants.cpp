#include <gtest/gtest.h>

#include <cmath>

#include "nekh/constants.hpp"

using namespace nekh;

namespace {

SystemConstants unit_system(double mu = 1e-4) {
  SystemConstants s;
  s.n = 2;
  s.m = 0;
  s.rho = 1;
  s.sigma = 1;
  s.mu = mu;
  s.convexity = {1, 1, 1, 0};
  return s;
}

void expect_self_auditing(const StabilityReport& rep) {
  for (const auto& row : rep.constraints)
    EXPECT_EQ(row.satisfied, row.strict ? row.lhs < row.rhs : row.lhs <= row.rhs) << row.name;
  EXPECT_EQ(rep.feasible(), rep.first_violation() == nullptr);
}

}  // namespace

TEST(Global, HandEvaluation) {
  RhoSplit split{0.6, 0.1, 0.2};
  StabilityReport rep = global_constants(unit_system(), 1e-4, split);
  EXPECT_NEAR(rep.confinement, 0.8, 1e-12);
  EXPECT_NEAR(rep.time_log, 1.25 * 0.6, 1e-12);
  EXPECT_NEAR(rep.Q, std::pow(1e-4, -0.25), 1e-9);
  EXPECT_NEAR(rep.RT_bar, 0.8, 1e-12);
  EXPECT_EQ(rep.regime, Regime::global);
  expect_self_auditing(rep);
  EXPECT_NE(rep.row("budget_log"), nullptr);
  EXPECT_NE(rep.row("eps_width"), nullptr);
  EXPECT_THROW(global_constants(unit_system(), 0, split), std::invalid_argument);
}

TEST(Global, Homogeneity) {
  RhoSplit split{0.6, 0.1, 0.2};
  SystemConstants s = unit_system();
  StabilityReport a = global_constants(s, 1e-6, split);
  s.convexity.m_plus = 2;
  StabilityReport b = global_constants(s, 1e-6, split);
  EXPECT_NEAR(b.confinement, 2 * a.confinement, 1e-14);
  EXPECT_NEAR(b.time_log, a.time_log / 4, 1e-12);
}

TEST(Global, BindingTermNamed) {
  StabilityReport rep = global_constants(unit_system(), 1e-2, RhoSplit{0.6, 0.1, 0.2});
  int binding = 0;
  for (const auto& row : rep.constraints)
    if (row.note == "binding") ++binding;
  EXPECT_EQ(binding, 1);
}

TEST(Global, SmallEpsSatisfiesEpsGatedRows) {
  RhoSplit split{0.6, 0.1, 0.2};
  bool prev = false;
  for (double e = 1e-2; e >= 1e-30; e /= 100) {
    StabilityReport rep = global_constants(unit_system(), e, split);
    bool gated = true;
    for (const auto& row : rep.constraints)
      if (row.name.rfind("eps_", 0) == 0 || row.name == "budget_log") gated = gated && row.satisfied;
    if (prev) EXPECT_TRUE(gated) << e;
    prev = gated;
  }
  EXPECT_TRUE(prev);
}

TEST(Local, Examples) {
  SystemConstants s = unit_system();
  RhoSplit split{0.8, 0.05, 0.1};
  StabilityReport rep = local_constants(s, 1e-6, LocalInputs{0.1, 1, std::sqrt(2.0)}, split);
  EXPECT_NEAR(rep.R, 0.8, 1e-15);
  EXPECT_NEAR(std::exp(rep.time_log), std::exp(1.0) / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(rep.K, 0.8 / (0.1 * 0.8), 1e-12);
  expect_self_auditing(rep);

  s.convexity = {2, 2, 1, 0};
  EXPECT_NEAR(local_constants(s, 1e-6, LocalInputs{0.03, 1, 1}, split).R, 0.24, 1e-15);

  StabilityReport z = local_constants(unit_system(), 0, LocalInputs{0.01, 1, 1}, split);
  EXPECT_TRUE(z.row("local_energy")->satisfied);
  EXPECT_TRUE(z.row("local_deviation")->satisfied);
  EXPECT_THROW(local_constants(s, 1e-6, LocalInputs{0, 1, 1}, split), std::invalid_argument);
}

TEST(Optimize, FeasibleSplitReverifies) {
  OptimizeResult r = optimize_rho_split(unit_system(), 1e-14);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.split.sum(), 1.0, 1e-12);
  EXPECT_LE(r.split.rho1, 1.0);
  EXPECT_GT(r.split.rho2, 0);
  EXPECT_GT(r.split.rho3, 0);
  StabilityReport again = global_constants(unit_system(), 1e-14, r.split);
  EXPECT_TRUE(again.feasible());
}

TEST(Optimize, SweepNondecreasing) {
  double prev = -1;
  bool seen_feasible = false;
  for (double e : {1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 1e-14, 1e-16}) {
    OptimizeResult r = optimize_rho_split(unit_system(), e);
    if (seen_feasible) EXPECT_TRUE(r.feasible) << e;
    if (!r.feasible) continue;
    seen_feasible = true;
    EXPECT_GE(r.split.rho1, prev - 1e-9) << e;
    prev = r.split.rho1;
  }
  EXPECT_TRUE(seen_feasible);
}

TEST(Optimize, InfeasibleNamesBinding) {
  OptimizeResult r = optimize_rho_split(unit_system(), 1e-2);
  EXPECT_FALSE(r.feasible);
  EXPECT_FALSE(r.binding.empty());
  EXPECT_NE(r.report.row(r.binding), nullptr);
}

TEST(Optimize, CustomEvaluator) {
  // feasible iff ρ₂ ≥ 0.1 and ρ₃ ≥ 0.05, so the best split is (0.75, 0.1, 0.05)
  auto eval = [](const RhoSplit& s) {
    StabilityReport rep;
    rep.rho_split = s;
    rep.constraints.push_back(make_row("a", 0.1, s.rho2));
    rep.constraints.push_back(make_row("b", 0.05, s.rho3));
    return rep;
  };
  OptimizeResult r = optimize_rho_split(eval, 1.0);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.split.rho1, 0.75, 1e-6);
}

TEST(Qualitative, RoundTrip) {
  double c0 = 0.4, c1 = 0.3, rho = 1;
  std::vector<double> mus, rho1s;
  for (double mu = 1e-6; mu <= 1e-2; mu *= 3) {
    // solve ρ₁ + c₁ ρ₁^{3/2} = ρ - c₀ μ^{1/2}
    double target = rho - c0 * std::sqrt(mu);
    double r1 = qualitative_limit(c1, target, 2);
    mus.push_back(mu);
    rho1s.push_back(r1);
  }
  QualitativeFit fit = fit_qualitative(mus, rho1s, rho, 2);
  EXPECT_NEAR(fit.c0, c0, 0.01 * c0);
  EXPECT_NEAR(fit.c1, c1, 0.01 * c1);
  double lim = fit.rho1_limit;
  EXPECT_NEAR(lim + c1 * std::pow(lim, 1.5), rho, 1e-6);
}

TEST(Qualitative, Degenerate) {
  EXPECT_THROW(fit_qualitative({1e-3}, {0.5}, 1, 2), std::invalid_argument);
  EXPECT_THROW(fit_qualitative({1e-3, 2e-3}, {0.5, 0.49}, 1, 2), std::invalid_argument);
}
