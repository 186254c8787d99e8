#pragma once

#include <vector>

#include "nekh/lattice.hpp"

namespace nekh {

enum class SumKind { pm, greater, zero };

struct SumQuery {
  IVec k;
  double delta = 0;
  PartitionParams params;
  const FrequencyVector* omega = nullptr;
};

// E(k, l±, l, δ) evaluated directly
double exponential_weight(const IVec& k, const IVec& lpm, const IVec& l, double delta,
                          const PartitionParams& params, const FrequencyVector& omega);

double sum_brute(const SumQuery& q, SumKind which, std::size_t cap = kDefaultEnumerationCap);

struct SumTriple {
  double pm = 0, greater = 0, zero = 0;
};

// All three sums for every k of the diamond at a fixed δ. E factorizes as
// w(l±) w(l) / w(k) with w(l) = exp(-|l|c - S_l <w,l>), so one pass over a
// dense box of radius 2K replaces the per-pair exponentials.
class SumTable {
 public:
  SumTable(double delta, const PartitionParams& params, const FrequencyVector& omega);
  SumTriple sums(const IVec& k) const;
  const std::vector<IVec>& diamond() const { return diamond_; }

 private:
  int n_;
  DenseBox box_;
  std::vector<double> w_;
  std::vector<unsigned char> cls_;  // Region per box point
  std::vector<IVec> diamond_;
  std::vector<std::size_t> pm_idx_;  // indices of D±(δ) members
  double diamond_reach_ = 0;
};

double bound_pm(double delta, const PartitionParams& params, const FrequencyVector& omega);
double bound_greater(double delta, const PartitionParams& params, const FrequencyVector& omega);

struct ZeroBound {
  double k_dependent = 0;
  double k_free = 0;
};
ZeroBound bound_zero(const IVec& k, double delta, const PartitionParams& params,
                     const FrequencyVector& omega);
double bound_zero_free(double delta, const PartitionParams& params, const FrequencyVector& omega);

// a(δ) = 6 K e^σ ε σ μ (2Σ± + Σ0 + Σ>) with the closed-form bounds; A its exact antiderivative.
class Budget {
 public:
  Budget(const PartitionParams& params, const FrequencyVector& omega, double eps, double mu,
         double sigma);
  double a(double delta) const;
  double A(double delta) const;
  double A_star() const { return A(params_.K * omega_.t_bar() * params_.rho3); }
  double prefactor() const { return pref_; }
  const PartitionParams& params() const { return params_; }

 private:
  PartitionParams params_;
  FrequencyVector omega_;
  double pref_;
};

Budget budget_A(const PartitionParams& params, const FrequencyVector& omega, double eps,
                double mu, double sigma);

// Closed form 6 e^σ σ ε μ T̄ (2K)^{n-1} K² ρ3 / n! (1 + 2n/(ρ3 K) (1 + ln(2K²ρ3/n))).
double adt_closed_form(int n, double sigma, double eps, double mu, double t_bar, double K,
                       double rho3);

double factorial(int n);

}  // namespace nekh
