#include "nekh/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "nekh/sums.hpp"

namespace nekh {

SystemConstants system_constants(const HamiltonianSpec& spec, double mu) {
  SystemConstants s;
  s.n = spec.n;
  s.m = spec.m;
  s.rho = spec.rho;
  s.sigma = spec.sigma;
  s.mu = mu;
  s.convexity = spec.convexity;
  return s;
}

bool StabilityReport::feasible() const {
  return std::all_of(constraints.begin(), constraints.end(),
                     [](const ConstraintRow& r) { return r.satisfied; });
}

const ConstraintRow* StabilityReport::first_violation() const {
  for (const auto& r : constraints)
    if (!r.satisfied) return &r;
  return nullptr;
}

const ConstraintRow* StabilityReport::row(const std::string& name) const {
  for (const auto& r : constraints)
    if (r.name == name) return &r;
  return nullptr;
}

ConstraintRow make_row(std::string name, double lhs, double rhs, bool strict, std::string note) {
  ConstraintRow r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.strict = strict;
  r.satisfied = strict ? lhs < rhs : lhs <= rhs;
  r.note = std::move(note);
  return r;
}

StabilityReport global_constants(const SystemConstants& sys, double eps, const RhoSplit& split) {
  if (!(eps > 0)) throw std::invalid_argument("global_constants: eps must be positive");
  const int n = sys.n, m = sys.m;
  const auto& c = sys.convexity;
  const double sq = std::sqrt(n - 1.0);
  const double e2n = std::pow(eps, 1.0 / (2 * n));
  const double grad = c.grad_inf;

  StabilityReport rep;
  rep.regime = Regime::global;
  rep.rho_split = split;
  rep.confinement = 8 * sq * c.m_plus / (c.m_minus * c.m_minus) * e2n * grad;
  double exponent =
      std::pow(c.m_minus / c.m_plus, 2) * split.rho1 / (8 * sq * e2n);
  rep.time_log = exponent - std::log(grad);
  rep.Q = std::pow(eps, -(n - 1.0) / (2 * n));
  rep.RT_bar = 8 * sq * c.m_plus * e2n / (c.m_minus * c.m_minus);
  rep.R = rep.confinement;
  rep.t_bar = rep.RT_bar / rep.R;
  rep.r = e2n * grad * sq / c.m_minus;
  rep.K = split.rho1 / (split.rho3 * c.m_plus * rep.RT_bar);

  auto& rows = rep.constraints;
  rows.push_back(make_row("mu_smallness", 6 * sys.mu / std::pow(split.rho2, n),
                          c.m_plus * c.m_plus / std::pow(c.m_minus, 3) * grad * grad));

  struct Term {
    const char* name;
    double value;
  };
  double pref = c.m_minus * c.m_minus / (8 * sq * c.m_plus);
  double inf = std::numeric_limits<double>::infinity();
  Term terms[] = {
      {"eps_deviation",
       sq * grad * grad / (5 * n * sys.mu * c.m_minus) * std::pow(split.rho2 + split.rho3, n)},
      {"eps_inversion", c.grad3_inf > 0 ? c.m_minus * c.m_minus / (4 * sq * c.grad3_inf) : inf},
      {"eps_width", pref * sys.sigma / (5 * (std::sqrt(double(n)) + 2 * std::sqrt(double(m))) * grad)},
      {"eps_cutoff_dim", pref * split.rho1 / (2 * (n + 2 * m) * split.rho3)},
      {"eps_cutoff_sigma", pref * 5 * split.rho1 * split.rho1 / (2 * sys.sigma * split.rho3)},
  };
  const Term* binding = &terms[0];
  for (const auto& t : terms)
    if (t.value < binding->value) binding = &t;
  for (const auto& t : terms)
    rows.push_back(make_row(t.name, e2n, t.value, false, &t == binding ? "binding" : ""));

  double base = split.rho1 * c.m_minus * c.m_minus / (split.rho3 * 4 * sq * c.m_plus);
  rows.push_back(make_row("budget_factorial",
                          3 * std::exp(sys.sigma) * split.rho3 / (factorial(n) * grad) *
                              std::pow(base, n + 1),
                          4 * sys.sigma / 25, true));
  double log_arg = split.rho1 * split.rho1 * std::pow(c.m_minus, 4) * std::pow(eps, -1.0 / n) /
                   (32.0 * n * (n - 1) * c.m_plus * c.m_plus * split.rho3);
  rows.push_back(make_row("budget_log",
                          e2n * 16 * n * sq * c.m_plus / (split.rho1 * c.m_minus * c.m_minus) *
                              (1 + std::log(log_arg)),
                          1.0));
  return rep;
}

StabilityReport local_constants(const SystemConstants& sys, double eps, const LocalInputs& in,
                                const RhoSplit& split) {
  if (eps < 0 || !(in.r > 0) || !(in.t_bar > 0) || !(in.omega_norm > 0))
    throw std::invalid_argument("local_constants: inputs must be positive");
  const int n = sys.n, m = sys.m;
  const auto& c = sys.convexity;
  StabilityReport rep;
  rep.regime = Regime::local;
  rep.rho_split = split;
  rep.r = in.r;
  rep.t_bar = in.t_bar;
  rep.R = 8 * in.r * c.m_plus / c.m_minus;
  rep.RT_bar = rep.R * in.t_bar;
  rep.confinement = rep.R;
  rep.K = split.rho1 / (split.rho3 * c.m_plus * rep.R * in.t_bar);
  rep.time_log = split.rho1 / (c.m_plus * rep.R * in.t_bar) - std::log(in.omega_norm);

  auto& rows = rep.constraints;
  rows.push_back(make_row("local_energy", 6 * eps * sys.mu * c.m_minus / std::pow(split.rho2, n),
                          c.m_plus * c.m_plus * in.r * in.r));
  rows.push_back(make_row("local_deviation",
                          5 * n * eps * sys.mu * in.t_bar / std::pow(split.rho2 + split.rho3, n),
                          in.r));
  double ycoef = std::sqrt(double(n)) + 2 * std::sqrt(double(m));
  rows.push_back(make_row("width", 5 * ycoef * rep.R, sys.sigma, true));
  rows.push_back(make_row("cutoff_dim", 2.0 * (n + 2 * m), rep.K));
  rows.push_back(make_row("cutoff_sigma", 2 * sys.sigma / (5 * split.rho1), rep.K));
  double a_star = adt_closed_form(n, sys.sigma, eps, sys.mu, in.t_bar, rep.K, split.rho3);
  rows.push_back(make_row("budget", a_star, 4 * sys.sigma * sys.sigma / 25));
  double gap = std::max(0.0, sys.sigma - ycoef * rep.R);
  rows.push_back(make_row("restriction", a_star, gap * gap / 4));
  return rep;
}

namespace {
double worst_ratio(const StabilityReport& rep, std::string* name) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : rep.constraints) {
    double ratio = r.rhs > 0 ? r.lhs / r.rhs : std::numeric_limits<double>::infinity();
    if (std::isnan(ratio)) ratio = std::numeric_limits<double>::infinity();
    if (ratio > worst) {
      worst = ratio;
      if (name) *name = r.name;
    }
  }
  return worst;
}

RhoSplit make_split(double rho, double rho2, double rho3) {
  return RhoSplit{rho - 2 * rho2 - rho3, rho2, rho3};
}
}  // namespace

OptimizeResult optimize_rho_split(const SplitEvaluator& eval, double rho, int grid, double tol) {
  if (!(rho > 0) || grid < 2) throw std::invalid_argument("optimize_rho_split: bad inputs");
  const double cell2 = rho / 2 / grid, cell3 = rho / grid;
  auto feasible = [&](double r2, double r3) {
    if (!(r2 > 0 && r3 > 0) || rho - 2 * r2 - r3 <= 0) return false;
    return eval(make_split(rho, r2, r3)).feasible();
  };

  OptimizeResult out;
  double best_r1 = -1, best_r2 = 0, best_r3 = 0;
  double least_bad = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    double r2 = (i + 0.5) * cell2;
    for (int j = 0; j < grid; ++j) {
      double r3 = (j + 0.5) * cell3;
      double r1 = rho - 2 * r2 - r3;
      if (r1 <= 0) continue;
      StabilityReport rep = eval(make_split(rho, r2, r3));
      if (rep.feasible()) {
        if (r1 > best_r1) {
          best_r1 = r1;
          best_r2 = r2;
          best_r3 = r3;
        }
      } else if (best_r1 < 0) {
        std::string name;
        double w = worst_ratio(rep, &name);
        if (w < least_bad) {
          least_bad = w;
          out.binding = name;
          out.report = rep;
          out.split = rep.rho_split;
        }
      }
    }
  }
  if (best_r1 < 0) {
    out.feasible = false;
    return out;
  }

  // smallest feasible ρ₂ at fixed ρ₃, starting from a feasible upper value
  auto min_rho2 = [&](double r3, double hi) {
    if (!feasible(hi, r3)) return std::numeric_limits<double>::quiet_NaN();
    double lo = 0;
    for (int it = 0; it < 200 && hi - lo > tol * rho; ++it) {
      double mid = 0.5 * (lo + hi);
      if (feasible(mid, r3))
        hi = mid;
      else
        lo = mid;
    }
    return hi;
  };
  auto value = [&](double r3) {
    double r2 = min_rho2(r3, best_r2 + cell2);
    if (std::isnan(r2)) return -std::numeric_limits<double>::infinity();
    return rho - 2 * r2 - r3;
  };

  double a = std::max(0.5 * cell3, best_r3 - cell3), b = best_r3 + cell3;
  const double g = (std::sqrt(5.0) - 1) / 2;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = value(x1), f2 = value(x2);
  while (b - a > tol * rho) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = value(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = value(x1);
    }
  }
  double r3 = 0.5 * (a + b);
  double r2 = min_rho2(r3, best_r2 + cell2);
  RhoSplit split = make_split(rho, best_r2, best_r3);
  if (!std::isnan(r2) && rho - 2 * r2 - r3 > best_r1 && feasible(r2, r3))
    split = make_split(rho, r2, r3);
  // also refine ρ₂ on the grid column itself so the result never falls below it
  double r2_col = min_rho2(best_r3, best_r2);
  if (!std::isnan(r2_col) && rho - 2 * r2_col - best_r3 > split.rho1)
    split = make_split(rho, r2_col, best_r3);

  out.report = eval(split);
  out.feasible = out.report.feasible();
  if (!out.feasible) throw std::logic_error("optimize_rho_split: refined split failed re-evaluation");
  out.split = split;
  return out;
}

OptimizeResult optimize_rho_split(const SystemConstants& sys, double eps) {
  return optimize_rho_split(
      [&](const RhoSplit& s) { return global_constants(sys, eps, s); }, sys.rho);
}

double qualitative_limit(double c1, double rho, int n) {
  double lo = 0, hi = rho;
  auto f = [&](double x) { return x + c1 * std::pow(x, 1 + 1.0 / n) - rho; };
  if (c1 <= 0 && f(hi) <= 0) return hi;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

QualitativeFit fit_qualitative(const std::vector<double>& mus, const std::vector<double>& rho1s,
                               double rho, int n) {
  if (mus.size() != rho1s.size() || mus.size() < 2)
    throw std::invalid_argument("qualitative fit: need at least two points");
  auto [lo, hi] = std::minmax_element(mus.begin(), mus.end());
  if (!(*lo > 0) || std::log10(*hi / *lo) < 1.0)
    throw std::invalid_argument("qualitative fit: mu grid spans less than one decade");
  Eigen::MatrixXd X(mus.size(), 2);
  Eigen::VectorXd y(mus.size());
  for (std::size_t i = 0; i < mus.size(); ++i) {
    X(i, 0) = std::pow(mus[i], 1.0 / n);
    X(i, 1) = std::pow(rho1s[i], 1 + 1.0 / n);
    y(i) = rho - rho1s[i];
  }
  Eigen::Vector2d c = X.colPivHouseholderQr().solve(y);
  QualitativeFit fit;
  fit.c0 = c(0);
  fit.c1 = c(1);
  fit.rho1_limit = qualitative_limit(fit.c1, rho, n);
  return fit;
}

QualitativeFit qualitative_split(const SystemConstants& sys, double eps,
                                 const std::vector<double>& mus) {
  std::vector<double> used_mu, rho1s;
  for (double mu : mus) {
    SystemConstants s = sys;
    s.mu = mu;
    OptimizeResult r = optimize_rho_split(s, eps);
    if (!r.feasible) continue;
    used_mu.push_back(mu);
    rho1s.push_back(r.split.rho1);
  }
  return fit_qualitative(used_mu, rho1s, sys.rho, sys.n);
}

}  // namespace nekh
