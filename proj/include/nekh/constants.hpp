#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nekh/model.hpp"

namespace nekh {

struct RhoSplit {
  double rho1 = 0, rho2 = 0, rho3 = 0;
  double sum() const { return rho1 + 2 * rho2 + rho3; }
};

// What the constant formulas read from a system.
struct SystemConstants {
  int n = 2;
  int m = 0;
  double rho = 1;
  double sigma = 1;
  double mu = 1;
  ConvexityConstants convexity;
};

SystemConstants system_constants(const HamiltonianSpec& spec, double mu);

struct ConstraintRow {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  bool strict = false;  // lhs < rhs instead of lhs ≤ rhs
  bool satisfied = false;
  std::string note;  // e.g. the binding term of a min
};

enum class Regime { local, global };

struct StabilityReport {
  Regime regime = Regime::global;
  double confinement = 0;
  double time_log = 0;  // ln 𝒯
  RhoSplit rho_split;
  double K = 0, R = 0, t_bar = 0, Q = 0, r = 0;
  double RT_bar = 0;  // ℛ T̄
  std::vector<ConstraintRow> constraints;
  bool feasible() const;
  const ConstraintRow* first_violation() const;
  const ConstraintRow* row(const std::string& name) const;
};

ConstraintRow make_row(std::string name, double lhs, double rhs, bool strict = false,
                       std::string note = {});

StabilityReport global_constants(const SystemConstants& sys, double eps, const RhoSplit& split);

struct LocalInputs {
  double r = 0;
  double t_bar = 1;
  double omega_norm = 1;  // |ω*|₂
};

StabilityReport local_constants(const SystemConstants& sys, double eps, const LocalInputs& in,
                                const RhoSplit& split);

struct OptimizeResult {
  bool feasible = false;
  RhoSplit split;
  StabilityReport report;
  std::string binding;  // infeasible: the row closest to holding at the least-bad grid point
};

using SplitEvaluator = std::function<StabilityReport(const RhoSplit&)>;

// 200×200 grid over (ρ₂, ρ₃), then golden-section in ρ₃ around the best cell with the
// smallest feasible ρ₂ found by bisection.
OptimizeResult optimize_rho_split(const SplitEvaluator& eval, double rho, int grid = 200,
                                  double tol = 1e-10);
OptimizeResult optimize_rho_split(const SystemConstants& sys, double eps);

struct QualitativeFit {
  double c0 = 0;
  double c1 = 0;
  double rho1_limit = 0;  // root of ρ₁ + c₁ ρ₁^{1+1/n} = ρ
};

// Least squares for ρ - ρ₁ = c₀ μ^{1/n} + c₁ ρ₁^{1+1/n}.
QualitativeFit fit_qualitative(const std::vector<double>& mus, const std::vector<double>& rho1s,
                               double rho, int n);
double qualitative_limit(double c1, double rho, int n);
QualitativeFit qualitative_split(const SystemConstants& sys, double eps,
                                 const std::vector<double>& mus);

}  // namespace nekh
