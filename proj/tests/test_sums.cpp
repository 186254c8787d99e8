#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "nekh/sums.hpp"

using namespace nekh;

namespace {

// Oracle: region membership and flow time recomputed from the definitions, pairs
// enumerated over a box with no diamond shortcut.
struct Oracle {
  const FrequencyVector& w;
  double rho2, rho3, K;

  double wk(const IVec& k) const {
    double d = 0;
    for (int j = 0; j < w.n(); ++j) d += k[j] * static_cast<double>(w.p()[j]);
    return d / w.t_bar();
  }
  int norm(const IVec& k) const {
    int s = 0;
    for (int v : k) s += std::abs(v);
    return s;
  }
  // 0: D0, 1: D+, -1: D-, 2: D>
  int region(const IVec& k, double delta) const {
    double d = wk(k);
    if (std::abs(d) < 1e-12) return 0;
    if (norm(k) + std::abs(d) * delta / rho3 <= K + 1e-12) return d > 0 ? 1 : -1;
    return 2;
  }
  double s(const IVec& k, double delta) const {
    double d = wk(k);
    if (std::abs(d) < 1e-12 || norm(k) > K + 1e-12) return 0;
    double exit = (K - norm(k)) * rho3 / std::abs(d);
    return (d > 0 ? 1 : -1) * std::min(delta, exit);
  }
  double weight(const IVec& k, const IVec& a, const IVec& b, double delta) const {
    double geo = (norm(a) + norm(b) - norm(k)) * (rho3 + 2 * rho2);
    double flow = s(a, delta) * wk(a) + s(b, delta) * wk(b) - s(k, delta) * wk(k);
    return std::exp(-geo - flow);
  }
  // which: 0 pm, 1 greater, 2 zero
  double sum(const IVec& k, double delta, int which) const {
    int n = w.n(), R = static_cast<int>(std::floor(K));
    IVec a(n, -R);
    double total = 0;
    while (true) {
      IVec b(n);
      for (int j = 0; j < n; ++j) b[j] = k[j] - a[j];
      int ra = region(a, delta), rb = region(b, delta);
      if (ra == 1 || ra == -1) {
        bool take = false;
        if (which == 0) take = ra == 1 && rb == -1;
        if (which == 1) take = rb == 2;
        if (which == 2) take = rb == 0;
        if (take) total += weight(k, a, b, delta);
      }
      int j = 0;
      while (j < n && ++a[j] > R) a[j++] = -R;
      if (j == n) break;
    }
    return total;
  }
};

FrequencyVector random_omega(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> pi(-3, 3);
  std::uniform_real_distribution<double> tb(0.5, 2);
  IVec p(n);
  int g = 0;
  while (g == 0) {
    for (int& v : p) v = pi(rng);
    g = 0;
    for (int v : p) g = std::gcd(g, std::abs(v));
  }
  for (int& v : p) v /= g;
  return FrequencyVector(p, tb(rng));
}

}  // namespace

TEST(SumBrute, ZeroExample) {
  FrequencyVector w({1, 0}, 1.0);
  PartitionParams pp = PartitionParams::with_cutoff(0.2, 0.1, 0.3, 4);
  SumQuery q{{1, 0}, 0.0, pp, &w};
  double want = 1 + 2 * (std::exp(-1.0) + std::exp(-2.0) + std::exp(-3.0));
  EXPECT_NEAR(sum_brute(q, SumKind::zero), want, 1e-12);
  EXPECT_NEAR(want, 2.1059, 2e-4);
}

TEST(SumBrute, EmptyDiamond) {
  FrequencyVector w({1, 1}, 1.0);
  PartitionParams pp = PartitionParams::with_cutoff(0.2, 0.1, 0.3, 0.8);
  SumQuery q{{1, 0}, 0.0, pp, &w};
  EXPECT_EQ(sum_brute(q, SumKind::pm), 0.0);
  EXPECT_EQ(sum_brute(q, SumKind::greater), 0.0);
  EXPECT_EQ(sum_brute(q, SumKind::zero), 0.0);
  EXPECT_THROW(sum_brute(SumQuery{{1, 0}, 0.0, pp, nullptr}, SumKind::pm), std::invalid_argument);
}

TEST(SumBrute, GreaterFarOutside) {
  FrequencyVector w({1, 1}, 1.0);
  PartitionParams pp = PartitionParams::with_cutoff(0.2, 0.1, 0.3, 5);
  Oracle o{w, 0.1, 0.3, 5};
  SumQuery q{{6, 6}, 0.0, pp, &w};
  EXPECT_NEAR(sum_brute(q, SumKind::greater), o.sum({6, 6}, 0.0, 1), 1e-12);
  // once D± has collapsed nothing is left to pair with
  q.delta = stopping_time(pp, w) * 1.01 + 1e-9;
  EXPECT_EQ(sum_brute(q, SumKind::greater), 0.0);
}

TEST(SumBrute, MatchesOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    int n = 2 + trial % 2;
    FrequencyVector w = random_omega(rng, n);
    double K = 3 + trial % 3;
    PartitionParams pp = PartitionParams::with_cutoff(0.3, 0.07, 0.2, K);
    Oracle o{w, 0.07, 0.2, K};
    double dstar = stopping_time(pp, w);
    auto diamond = enumerate_diamond(K, n);
    for (int s = 0; s < 4; ++s) {
      const IVec& k = diamond[rng() % diamond.size()];
      double delta = dstar * s / 3.0;
      for (int which = 0; which < 3; ++which) {
        double got = sum_brute(SumQuery{k, delta, pp, &w}, static_cast<SumKind>(which));
        double want = o.sum(k, delta, which);
        EXPECT_NEAR(got, want, 1e-11 * std::max(1.0, want)) << "which=" << which;
      }
    }
  }
}

TEST(SumTable, AgreesWithBrute) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 12; ++trial) {
    int n = 2 + trial % 2;
    FrequencyVector w = random_omega(rng, n);
    PartitionParams pp = PartitionParams::with_cutoff(0.3, 0.05, 0.25, 4 + trial % 3);
    double delta = stopping_time(pp, w) * (trial % 4) / 4.0;
    SumTable table(delta, pp, w);
    for (const IVec& k : table.diamond()) {
      SumTriple t = table.sums(k);
      SumQuery q{k, delta, pp, &w};
      EXPECT_NEAR(t.pm, sum_brute(q, SumKind::pm), 1e-11 * std::max(1.0, t.pm));
      EXPECT_NEAR(t.greater, sum_brute(q, SumKind::greater), 1e-11 * std::max(1.0, t.greater));
      EXPECT_NEAR(t.zero, sum_brute(q, SumKind::zero), 1e-11 * std::max(1.0, t.zero));
    }
  }
}

TEST(Bounds, PmExamples) {
  FrequencyVector w({1, 1}, 1.0);
  PartitionParams pp = PartitionParams::with_cutoff(0.2, 0.1, 0.3, 5);
  EXPECT_DOUBLE_EQ(bound_pm(0, pp, w), 25.0);
  EXPECT_DOUBLE_EQ(bound_pm(1, pp, w), 5.0);
  EXPECT_DOUBLE_EQ(bound_greater(0, pp, w), 50.0);
  EXPECT_DOUBLE_EQ(bound_greater(1, pp, w), 10.0);
  double sw = 2.0 / 10.0;
  EXPECT_NEAR(bound_pm(sw, pp, w), 25.0, 1e-12);
  EXPECT_NEAR(bound_pm(sw * (1 + 1e-12), pp, w), 25.0, 1e-9);
}

TEST(Bounds, ZeroExamples) {
  FrequencyVector w2({1, 0}, 1.0);
  PartitionParams pp = PartitionParams::with_cutoff(0.2, 0.1, 0.3, 4);
  EXPECT_DOUBLE_EQ(bound_zero({1, 0}, 0, pp, w2).k_dependent, 8.0);
  EXPECT_DOUBLE_EQ(bound_zero({1, 0}, 0, pp, w2).k_free, 8.0);
  EXPECT_EQ(bound_zero({1, 0}, 100, pp, w2).k_dependent, 0.0);
  EXPECT_EQ(bound_zero_free(100, pp, w2), 0.0);
  FrequencyVector w3({1, 0, 0}, 1.0);
  EXPECT_DOUBLE_EQ(bound_zero({1, 0, 0}, 0, pp, w3).k_dependent, 32.0);
  // resonant k keeps the full base
  EXPECT_DOUBLE_EQ(bound_zero({0, 1}, 5, pp, w2).k_dependent, 8.0);
}

TEST(Bounds, PmMonotoneAndContinuous) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + trial % 3;
    FrequencyVector w = random_omega(rng, n);
    PartitionParams pp = PartitionParams::with_cutoff(0.3, 0.1, 0.2, 3 + trial % 9);
    double sw = w.t_bar() * n / (2 * pp.K);
    EXPECT_NEAR(bound_pm(sw * (1 - 1e-13), pp, w), bound_pm(sw * (1 + 1e-13), pp, w),
                1e-9 * bound_pm(sw, pp, w));
    double prev = bound_pm(0, pp, w);
    double dstar = stopping_time(pp, w);
    for (int i = 1; i <= 50; ++i) {
      double v = bound_pm(dstar * i / 50, pp, w);
      EXPECT_LE(v, prev + 1e-12);
      prev = v;
    }
  }
}

TEST(Budget, ClosedFormExample) {
  double v = adt_closed_form(2, 1, 1e-3, 1, 1, 10, 0.1);
  // hand evaluation: 6e·1e-3·20·100·0.1/2 · (1 + 4(1 + ln 10))
  double want = 6 * std::exp(1.0) * 1e-3 * 20 * 100 * 0.1 / 2 * (1 + 4 * (1 + std::log(10.0)));
  EXPECT_NEAR(v, want, 1e-12 * want);
  EXPECT_NEAR(v, 23.2, 0.1);
}

TEST(Budget, ZeroEps) {
  FrequencyVector w({1, 1}, 1.0);
  PartitionParams pp = PartitionParams::with_cutoff(0.2, 0.1, 0.1, 10);
  Budget b = budget_A(pp, w, 0, 1, 1);
  EXPECT_EQ(b.A_star(), 0.0);
  EXPECT_EQ(b.a(0.3), 0.0);
}

TEST(Budget, AntiderivativeMatchesQuadrature) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 2 + trial % 2;
    FrequencyVector w = random_omega(rng, n);
    PartitionParams pp = PartitionParams::with_cutoff(0.3, 0.1, 0.15, 4 + trial % 6);
    Budget b = budget_A(pp, w, 1e-4, 0.7, 0.9);
    double top = pp.K * w.t_bar() * pp.rho3;
    const int N = 200000;
    double h = top / N, q = 0;
    for (int i = 0; i < N; ++i) q += h * b.a((i + 0.5) * h);
    EXPECT_NEAR(b.A_star(), q, 1e-6 * q);
    EXPECT_GE(b.A_star(), 0.0);
    EXPECT_LE(b.A(top / 3), b.A(top / 2));
  }
}

TEST(Budget, AstarNearClosedForm) {
  FrequencyVector w({1, 1}, 1.0);
  PartitionParams pp = PartitionParams::with_cutoff(0.2, 0.1, 0.1, 10);
  Budget b = budget_A(pp, w, 1e-3, 1, 1);
  double adt = adt_closed_form(2, 1, 1e-3, 1, 1, 10, 0.1);
  EXPECT_NEAR(b.A_star(), adt, 0.01 * adt);
}

TEST(Budget, DominatesBruteQuadrature) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    FrequencyVector w = random_omega(rng, 2);
    PartitionParams pp = PartitionParams::with_cutoff(0.3, 0.1, 0.2, 4 + trial);
    Budget b = budget_A(pp, w, 1e-4, 1, 1);
    double dstar = stopping_time(pp, w);
    const int N = 40;
    double h = dstar / N, q = 0;
    for (int i = 0; i < N; ++i) {
      SumTable t((i + 0.5) * h, pp, w);
      double worst = 0;
      for (const IVec& k : t.diamond()) {
        SumTriple s = t.sums(k);
        worst = std::max(worst, 2 * s.pm + s.zero + s.greater);
      }
      q += h * b.prefactor() * worst;
    }
    EXPECT_GE(b.A_star(), q);
  }
}
