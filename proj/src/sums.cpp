#include "nekh/sums.hpp"

#include <cmath>
#include <stdexcept>

namespace nekh {

double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double exponential_weight(const IVec& k, const IVec& lpm, const IVec& l, double delta,
                          const PartitionParams& params, const FrequencyVector& omega) {
  double c = params.rho3 + 2 * params.rho2;
  double geo = (l1_norm(lpm) + l1_norm(l) - l1_norm(k)) * c;
  double flow = s_k(lpm, delta, params, omega) * omega.dot(lpm) +
                s_k(l, delta, params, omega) * omega.dot(l) -
                s_k(k, delta, params, omega) * omega.dot(k);
  return std::exp(-geo - flow);
}

double sum_brute(const SumQuery& q, SumKind which, std::size_t cap) {
  if (!q.omega) throw std::invalid_argument("sum_brute: missing frequency vector");
  const FrequencyVector& omega = *q.omega;
  if (q.params.K < 1) return 0.0;
  std::vector<IVec> diamond = enumerate_diamond(q.params.K, omega.n(), cap);
  double total = 0;
  bool free_plus = omega.dot_p(q.k) >= 0;
  for (const IVec& lpm : diamond) {
    Region r = classify(lpm, q.delta, q.params, omega);
    if (r != Region::Dplus && r != Region::Dminus) continue;
    IVec l = q.k - lpm;
    Region rl = classify(l, q.delta, q.params, omega);
    switch (which) {
      case SumKind::pm:
        // free variable l+ when <w,k> >= 0, l- otherwise; the partner takes the other sign
        if (free_plus ? (r == Region::Dplus && rl == Region::Dminus)
                      : (r == Region::Dminus && rl == Region::Dplus))
          total += exponential_weight(q.k, lpm, l, q.delta, q.params, omega);
        break;
      case SumKind::greater:
        if (rl == Region::Dgreater) total += exponential_weight(q.k, lpm, l, q.delta, q.params, omega);
        break;
      case SumKind::zero:
        if (rl == Region::D0) total += exponential_weight(q.k, lpm, l, q.delta, q.params, omega);
        break;
    }
  }
  return total;
}

SumTable::SumTable(double delta, const PartitionParams& params, const FrequencyVector& omega)
    : n_(omega.n()),
      box_(omega.n(), std::max(1, static_cast<int>(std::ceil(2 * params.K)))) {
  double c = params.rho3 + 2 * params.rho2;
  w_.resize(box_.size());
  cls_.resize(box_.size());
  for (std::size_t i = 0; i < box_.size(); ++i) {
    IVec l = box_.point(i);
    w_[i] = std::exp(-l1_norm(l) * c - s_k(l, delta, params, omega) * omega.dot(l));
    Region r = classify(l, delta, params, omega);
    cls_[i] = static_cast<unsigned char>(r);
    if ((r == Region::Dplus || r == Region::Dminus)) pm_idx_.push_back(i);
  }
  diamond_reach_ = params.K;
  if (params.K >= 0) diamond_ = enumerate_diamond(params.K, n_);
}

SumTriple SumTable::sums(const IVec& k) const {
  SumTriple out;
  if (l1_norm(k) + static_cast<int>(std::floor(diamond_reach_ + 1e-12)) > box_.radius())
    throw std::out_of_range("SumTable: k outside the table");
  std::size_t base = 0;
  {
    IVec zero(n_, 0);
    base = box_.index(zero);
  }
  std::size_t ik = box_.index(k);
  double inv_wk = 1.0 / w_[ik];
  for (std::size_t ip : pm_idx_) {
    // index(k - l) = index(k) - index(l) + index(0) in a centered row-major box
    std::size_t il = ik + base - ip;
    auto rl = static_cast<Region>(cls_[il]);
    auto rp = static_cast<Region>(cls_[ip]);
    double e = w_[ip] * w_[il] * inv_wk;
    if (rl == Region::Dgreater) {
      out.greater += e;
    } else if (rl == Region::D0) {
      out.zero += e;
    } else if (rp == Region::Dplus && rl == Region::Dminus) {
      out.pm += e;
    }
  }
  return out;
}

double bound_pm(double delta, const PartitionParams& params, const FrequencyVector& omega) {
  int n = omega.n();
  double K = params.K;
  double tb = omega.t_bar();
  if (K <= 0) return 0.0;
  if (delta <= tb * n / (2 * K)) return std::pow(2 * K, n) / (2 * factorial(n));
  return std::pow(2 * K, n - 1) * tb / (2 * factorial(n - 1) * delta);
}

double bound_greater(double delta, const PartitionParams& params, const FrequencyVector& omega) {
  return 2 * bound_pm(delta, params, omega);
}

namespace {
double zero_base(double K, double rate, double delta, double rho3, int n) {
  double base = 2 * K - 2 * rate * delta / rho3;
  if (base <= 0) return 0.0;
  return std::pow(base, n - 1) / factorial(n - 1);
}
}  // namespace

ZeroBound bound_zero(const IVec& k, double delta, const PartitionParams& params,
                     const FrequencyVector& omega) {
  ZeroBound b;
  b.k_dependent = zero_base(params.K, std::abs(omega.dot(k)), delta, params.rho3, omega.n());
  b.k_free = bound_zero_free(delta, params, omega);
  return b;
}

double bound_zero_free(double delta, const PartitionParams& params, const FrequencyVector& omega) {
  return zero_base(params.K, 1.0 / omega.t_bar(), delta, params.rho3, omega.n());
}

Budget::Budget(const PartitionParams& params, const FrequencyVector& omega, double eps, double mu,
               double sigma)
    : params_(params), omega_(omega) {
  if (eps < 0 || mu < 0 || sigma <= 0) throw std::invalid_argument("Budget: bad inputs");
  pref_ = 6 * params.K * std::exp(sigma) * eps * sigma * mu;
}

double Budget::a(double delta) const {
  return pref_ * (2 * bound_pm(delta, params_, omega_) + bound_greater(delta, params_, omega_) +
                  bound_zero_free(delta, params_, omega_));
}

double Budget::A(double delta) const {
  if (delta <= 0 || params_.K <= 0) return 0.0;
  int n = omega_.n();
  double K = params_.K;
  double tb = omega_.t_bar();
  double rho3 = params_.rho3;
  double switch_at = tb * n / (2 * K);
  double p0 = 2 * std::pow(2 * K, n) / factorial(n);
  double ip = delta <= switch_at
                  ? p0 * delta
                  : p0 * switch_at + 2 * std::pow(2 * K, n - 1) * tb / factorial(n - 1) *
                                         std::log(delta / switch_at);
  double u = std::max(0.0, 2 * K - 2 * delta / (tb * rho3));
  double iz = tb * rho3 / 2 * (std::pow(2 * K, n) - std::pow(u, n)) / factorial(n);
  return pref_ * (ip + iz);
}

Budget budget_A(const PartitionParams& params, const FrequencyVector& omega, double eps,
                double mu, double sigma) {
  return Budget(params, omega, eps, mu, sigma);
}

double adt_closed_form(int n, double sigma, double eps, double mu, double t_bar, double K,
                       double rho3) {
  return 6 * std::exp(sigma) * sigma * eps * mu * t_bar * std::pow(2 * K, n - 1) * K * K * rho3 /
         factorial(n) * (1 + 2 * n / (rho3 * K) * (1 + std::log(2 * K * K * rho3 / n)));
}

}  // namespace nekh
