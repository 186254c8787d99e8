#include <gtest/gtest.h>

#include <cmath>

#include "nekh/averaging.hpp"
#include "nekh/sums.hpp"

using namespace nekh;

namespace {

// H0 linear in I, so G ≡ 0
GPart flat_g(const RVec& omega) {
  int n = static_cast<int>(omega.size());
  std::vector<Polynomial::Term> terms;
  for (int j = 0; j < n; ++j) {
    std::vector<int> e(n, 0);
    e[j] = 1;
    terms.push_back({omega[j], e});
  }
  return GPart(Polynomial(n, terms), omega);
}

GPart curved_g(const RVec& omega, double a) {
  Eigen::MatrixXd A = a * Eigen::MatrixXd::Identity(2, 2);
  return GPart(Polynomial::quadratic(A, Eigen::Map<const Eigen::VectorXd>(omega.data(), 2)), omega);
}

void set_real_mode(FourierField& f, const IVec& k, const Coef& c) {
  f.set(k, c);
  Coef cc(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) cc[i] = std::conj(c[i]);
  IVec mk(k.size());
  for (std::size_t j = 0; j < k.size(); ++j) mk[j] = -k[j];
  f.set(mk, cc);
}

Coef sampled(const SlowGrid& grid, const std::function<cplx(const RVec&)>& fn) {
  Coef c(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) c[g] = fn(grid.point(g));
  return c;
}

AveragingConfig quiet(double eps) {
  AveragingConfig cfg;
  cfg.eps = eps;
  cfg.enforce_constraints = false;
  cfg.check_envelope = false;
  return cfg;
}

}  // namespace

TEST(Rhs, PureDecayWithoutPerturbationScale) {
  FrequencyVector w({1, 2}, 1.0);
  PartitionParams pp = PartitionParams::with_cutoff(0.3, 0.1, 0.2, 3);
  SlowGrid grid = SlowGrid::box(2, 0.1, 5);
  FourierField f(2, grid, 3);
  set_real_mode(f, {1, 0}, sampled(grid, [](const RVec& p) { return cplx(1 + p[0], p[1]); }));
  set_real_mode(f, {2, -1}, sampled(grid, [](const RVec&) { return cplx(0.5, 0); }));
  AveragingState st = make_state(f, pp, w, flat_g({1, 2}));
  FourierField d = rhs_3cont(st, quiet(0));
  for (const auto& [k, c] : d.modes) {
    double rate = -std::abs(w.dot(k));
    const Coef& h = f.modes.at(k);
    for (std::size_t g = 0; g < grid.size(); ++g) EXPECT_NEAR(std::abs(c[g] - rate * h[g]), 0, 1e-14);
  }
  // resonant (2,-1) does not move
  EXPECT_FALSE(d.modes.count({2, -1}));
}

TEST(Rhs, PairConvolution) {
  FrequencyVector w({1, 2}, 1.0);
  PartitionParams pp = PartitionParams::with_cutoff(0.3, 0.1, 0.2, 2);
  SlowGrid grid = SlowGrid::box(2, 0.2, 5);
  FourierField f(2, grid, 2);
  // (1,0) ∈ D+, (0,-1) ∈ D-, target (1,-1)
  f.set({1, 0}, sampled(grid, [](const RVec& p) { return cplx(p[1], 0); }));
  f.set_constant({0, -1}, 1.0);
  double eps = 1e-3;
  AveragingState st = make_state(f, pp, w, flat_g({1, 2}));
  FourierField d = rhs_3cont(st, quiet(eps));
  ASSERT_TRUE(d.modes.count({1, -1}));
  // iε(σ₊{f e^{iaθ}, h e^{ibθ}} + σ₋{h e^{ibθ}, f e^{iaθ}}) with f = I₂, h = 1
  for (const cplx& v : d.modes.at({1, -1})) EXPECT_NEAR(std::abs(v - cplx(-2 * eps, 0)), 0, 1e-13);
  // a lone mode has no self-bracket
  FourierField one(2, grid, 2);
  one.set({1, 0}, sampled(grid, [](const RVec& p) { return cplx(p[1], 0); }));
  FourierField d1 = rhs_3cont(make_state(one, pp, w, flat_g({1, 2})), quiet(eps));
  EXPECT_FALSE(d1.modes.count({2, 0}));
}

TEST(Rhs, ResonantOnlyIsStatic) {
  FrequencyVector w({1, 1}, 1.0);
  PartitionParams pp = PartitionParams::with_cutoff(0.3, 0.1, 0.2, 3);
  SlowGrid grid = SlowGrid::box(2, 0.1, 5);
  FourierField f(2, grid, 3);
  set_real_mode(f, {1, -1}, sampled(grid, [](const RVec& p) { return cplx(p[0], 1); }));
  FourierField d = rhs_3cont(make_state(f, pp, w, curved_g({1, 1}, 1)), quiet(1e-2));
  EXPECT_TRUE(d.empty());
}

TEST(ApplyG, Examples) {
  SlowGrid grid({1, 0}, {1, 0}, {1, 1});
  GPart g = curved_g({0, 0}, 1);  // G = |I|²/2
  Coef c{cplx(2, -1)};
  Coef out = apply_g(c, {2, 0}, 0.3, grid, g);
  EXPECT_NEAR(std::abs(out[0] - c[0] * std::exp(-0.6)), 0, 1e-15);
  EXPECT_EQ(apply_g(c, {2, 0}, 0, grid, g)[0], c[0]);
  EXPECT_EQ(apply_g(c, {0, 3}, 5, grid, g)[0], c[0]);
  EXPECT_THROW(apply_g(c, {2, 0}, 1000, grid, g), std::overflow_error);
}

TEST(RunAveraging, ZeroEpsDecaysExactly) {
  FrequencyVector w({1, 2}, 1.0);
  PartitionParams pp = PartitionParams::with_cutoff(0.3, 0.1, 0.2, 4);
  SlowGrid grid = SlowGrid::box(2, 0.1, 5);
  FourierField f(2, grid, 4);
  set_real_mode(f, {1, 0}, sampled(grid, [](const RVec&) { return cplx(0.3, 0.1); }));
  set_real_mode(f, {1, 1}, sampled(grid, [](const RVec&) { return cplx(0.2, 0); }));
  set_real_mode(f, {2, -1}, sampled(grid, [](const RVec&) { return cplx(0.1, 0); }));
  NormalFormResult r = run_averaging(make_state(f, pp, w, flat_g({1, 2})), quiet(0));
  EXPECT_EQ(r.deviation_inf, 0.0);
  EXPECT_EQ(r.leaked_mass, 0.0);
  for (const auto& [k, c] : r.nonresonant.modes) {
    double exit = delta_exit(k, pp, w);
    double want = std::abs(f.modes.at(k)[0]) * std::exp(-std::abs(w.dot(k)) * std::min(exit, r.delta_star));
    EXPECT_NEAR(std::abs(c[0]), want, 1e-8 * want);
  }
  EXPECT_EQ(r.resonant.modes.at({2, -1}), f.modes.at({2, -1}));
}

TEST(RunAveraging, HomogeneousDecayOracle) {
  FrequencyVector w({1, 2}, 1.0);
  PartitionParams pp = PartitionParams::with_cutoff(0.3, 0.1, 0.2, 4);
  SlowGrid grid = SlowGrid::box(2, 0.05, 5);
  GPart g = curved_g({1, 2}, 0.7);
  FourierField f(2, grid, 4);
  for (const IVec& k : enumerate_diamond(3, 2)) {
    if (k < IVec{0, 0} || l1_norm(k) == 0) continue;
    set_real_mode(f, k, sampled(grid, [&](const RVec& p) {
                    return cplx(std::exp(-l1_norm(k)) * (1 + p[0]), 0.1 * p[1]);
                  }));
  }
  AveragingConfig cfg = quiet(1e-3);
  cfg.convolutions = false;
  cfg.keep_snapshots = true;
  cfg.rtol = 1e-12;
  NormalFormResult r = run_averaging(make_state(f, pp, w, g), cfg);
  ASSERT_GT(r.snapshots.size(), 2u);
  double worst = 0;
  for (const Snapshot& s : r.snapshots) {
    for (const auto& [k, c0] : f.modes) {
      double sk = s_k(k, s.delta, pp, w);
      const Coef& c = s.field.modes.at(k);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        RVec p = grid.point(i);
        RVec dg = g.grad({p[0], p[1]});
        double kg = k[0] * dg[0] + k[1] * dg[1];
        cplx want = c0[i] * std::exp(-w.dot(k) * sk - kg * sk);
        worst = std::max(worst, std::abs(c[i] - want) / std::abs(want));
      }
    }
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(RunAveraging, RealityAndResonantConservation) {
  FrequencyVector w({1, 1}, 1.0);
  PartitionParams pp = PartitionParams::with_cutoff(0.4, 0.1, 0.2, 4);
  SlowGrid grid = SlowGrid::box(2, 0.05, 5);
  FourierField f(2, grid, 6);
  set_real_mode(f, {1, 0}, sampled(grid, [](const RVec& p) { return cplx(0.2 + p[1], 0.05); }));
  set_real_mode(f, {0, 1}, sampled(grid, [](const RVec& p) { return cplx(0.1, p[0]); }));
  set_real_mode(f, {1, -1}, sampled(grid, [](const RVec& p) { return cplx(0.1 * p[0], 0.02); }));
  AveragingConfig cfg = quiet(0.05);
  NormalFormResult r = run_averaging(make_state(f, pp, w, curved_g({1, 1}, 1)), cfg);
  FourierField all = r.resonant;
  for (const auto& [k, c] : r.nonresonant.modes) all.modes[k] = c;
  double worst = 0;
  for (const auto& [k, c] : all.modes) {
    IVec mk{-k[0], -k[1]};
    ASSERT_TRUE(all.modes.count(mk));
    const Coef& cm = all.modes.at(mk);
    for (std::size_t i = 0; i < c.size(); ++i) worst = std::max(worst, std::abs(c[i] - std::conj(cm[i])));
  }
  EXPECT_LE(worst, 1e-12);

  cfg.convolutions = false;
  NormalFormResult h = run_averaging(make_state(f, pp, w, curved_g({1, 1}, 1)), cfg);
  EXPECT_EQ(h.resonant.modes.at({1, -1}), f.modes.at({1, -1}));
}

TEST(RunAveraging, ConstraintBulletsNamed) {
  FrequencyVector w({1, 1}, 1.0);
  SlowGrid grid = SlowGrid::box(2, 0.05, 5);
  auto bullet = [&](const PartitionParams& pp, double sigma, double eps) {
    FourierField f(2, grid, static_cast<int>(std::ceil(pp.K)) + 2);
    AveragingConfig cfg;
    cfg.eps = eps;
    cfg.sigma = sigma;
    try {
      check_averaging_constraints(make_state(f, pp, w, flat_g({1, 1})), cfg);
    } catch (const ConstraintViolation& e) {
      return e.bullet();
    }
    return std::string("none");
  };
  PartitionParams ok = PartitionParams::from_split(0.6, 0.1, 0.2, 1, 0.05, 1);
  EXPECT_EQ(bullet(ok, 1, 1e-12), "none");
  EXPECT_EQ(bullet(ok, 0.3, 1e-12), "width");
  EXPECT_EQ(bullet(PartitionParams::with_cutoff(0.6, 0.1, 0.2, 3), 1, 1e-12), "cutoff_dim");
  EXPECT_EQ(bullet(PartitionParams::with_cutoff(0.05, 0.1, 0.2, 7), 1, 1e-12), "cutoff_sigma");
  EXPECT_EQ(bullet(ok, 1, 1e-2), "budget");
}

TEST(Reference, ZeroEpsExact) {
  ReferenceConfig cfg;
  cfg.eps = 0;
  cfg.delta_end = 2;
  cfg.truncation = 3;
  cfg.modes = {{1, [](double x, double) { return cplx(0.5 * std::cos(x), 0); }},
               {-1, [](double x, double) { return cplx(0.5 * std::cos(x), 0); }},
               {2, [](double, double y) { return cplx(0.1, 0.2 * y); }},
               {-2, [](double, double y) { return cplx(0.1, -0.2 * y); }}};
  ReferenceReport r = run_1dof_reference(cfg);
  EXPECT_FALSE(r.halted);
  for (const DecayRow& d : r.decay) {
    if (d.delta == 0) continue;
    int k = std::abs(d.k[0]);
    // sup of 0.5 cos x over the box sits at x = 0
    if (k == 1) EXPECT_NEAR(d.abs_coeff, 0.5 * std::exp(-d.delta), 1e-8);
    if (k == 2) EXPECT_NEAR(d.abs_coeff, std::hypot(0.1, 0.04) * std::exp(-2 * d.delta), 1e-8);
  }
  EXPECT_TRUE(r.bound_ok);
}

TEST(Reference, PendulumBoundHolds) {
  ReferenceConfig cfg;
  cfg.eps = 1e-3;
  cfg.delta_end = 3;
  cfg.modes = {{1, [](double x, double) { return cplx(0.5 * std::cos(x), 0); }},
               {-1, [](double x, double) { return cplx(0.5 * std::cos(x), 0); }}};
  ReferenceReport r = run_1dof_reference(cfg);
  EXPECT_FALSE(r.halted);
  EXPECT_TRUE(r.bound_ok) << r.worst_ratio;
  EXPECT_GT(r.checks, 0u);
  EXPECT_NEAR(r.C, 4 * r.mu * 1e-3 * 2, 1e-15);
}

TEST(Reference, HaltsAtMaximalFlowTime) {
  ReferenceConfig cfg;
  cfg.eps = 0.05;
  cfg.delta_end = 100;
  cfg.truncation = 4;
  cfg.modes = {{1, [](double x, double) { return cplx(0.5 * std::cos(x), 0); }},
               {-1, [](double x, double) { return cplx(0.5 * std::cos(x), 0); }}};
  ReferenceReport r = run_1dof_reference(cfg);
  EXPECT_TRUE(r.halted);
  EXPECT_TRUE(r.domain_signal);
  EXPECT_DOUBLE_EQ(r.reached, cfg.sigma / (8 * r.C));
  EXPECT_DOUBLE_EQ(r.max_flow_time, r.reached);
}
