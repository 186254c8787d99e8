#include "nekh/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nekh {

namespace {
// Closed boundary of D±: absorbs the rounding in rho3 (K - |k|) / |<k,w>|.
constexpr double kBoundaryTol = 1e-12;
}  // namespace

int l1_norm(const IVec& k) {
  int s = 0;
  for (int v : k) s += std::abs(v);
  return s;
}

IVec operator-(const IVec& a, const IVec& b) {
  IVec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

IVec operator+(const IVec& a, const IVec& b) {
  IVec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

FrequencyVector::FrequencyVector(IVec p, double t_bar) : p_(std::move(p)), t_bar_(t_bar) {
  if (p_.empty()) throw std::invalid_argument("FrequencyVector: empty p");
  if (!(t_bar_ > 0)) throw std::invalid_argument("FrequencyVector: t_bar must be positive");
  int g = 0;
  for (int v : p_) g = std::gcd(g, std::abs(v));
  if (g != 1) throw std::invalid_argument("FrequencyVector: gcd(p) must be 1");
}

double FrequencyVector::period() const { return 2 * std::numbers::pi * t_bar_; }

RVec FrequencyVector::omega() const {
  RVec w(p_.size());
  for (std::size_t i = 0; i < p_.size(); ++i) w[i] = p_[i] / t_bar_;
  return w;
}

double FrequencyVector::omega_norm2() const {
  double s = 0;
  for (int v : p_) s += double(v) * v;
  return std::sqrt(s) / t_bar_;
}

std::int64_t FrequencyVector::dot_p(const IVec& k) const {
  if (k.size() != p_.size()) throw std::invalid_argument("dot_p: dimension mismatch");
  std::int64_t s = 0;
  for (std::size_t i = 0; i < k.size(); ++i) s += std::int64_t(k[i]) * p_[i];
  return s;
}

PartitionParams PartitionParams::from_split(double rho1, double rho2, double rho3, double m_plus,
                                            double R, double t_bar) {
  if (!(rho1 > 0 && rho2 > 0 && rho3 > 0)) throw std::invalid_argument("rho split must be positive");
  if (!(m_plus > 0 && R > 0 && t_bar > 0)) throw std::invalid_argument("M+, R, T̄ must be positive");
  PartitionParams p;
  p.rho1 = rho1;
  p.rho2 = rho2;
  p.rho3 = rho3;
  p.R = R;
  p.K = rho1 / (rho3 * m_plus * R * t_bar);
  return p;
}

PartitionParams PartitionParams::with_cutoff(double rho1, double rho2, double rho3, double K) {
  PartitionParams p;
  p.rho1 = rho1;
  p.rho2 = rho2;
  p.rho3 = rho3;
  p.K = K;
  return p;
}

void PartitionParams::validate(double rho, double m_plus, double t_bar) const {
  if (std::abs(rho1 + 2 * rho2 + rho3 - rho) > 1e-12 * std::max(1.0, rho))
    throw std::invalid_argument("rho split does not sum to rho");
  double k_expected = rho1 / (rho3 * m_plus * R * t_bar);
  if (std::abs(K - k_expected) > 1e-12 * std::max(1.0, k_expected))
    throw std::invalid_argument("K inconsistent with rho1/(rho3 M+ R T̄)");
}

const char* region_name(Region r) {
  switch (r) {
    case Region::Dplus: return "Dplus";
    case Region::Dminus: return "Dminus";
    case Region::D0: return "D0";
    case Region::Dgreater: return "Dgreater";
  }
  return "?";
}

Region classify(const IVec& k, double delta, const PartitionParams& params,
                const FrequencyVector& omega) {
  std::int64_t d = omega.dot_p(k);
  if (d == 0) return Region::D0;
  double w = std::abs(double(d)) / omega.t_bar();
  double lhs = l1_norm(k) * params.rho3 + w * delta;
  double rhs = params.rho3 * params.K;
  if (lhs <= rhs + kBoundaryTol * std::max(1.0, rhs)) return d > 0 ? Region::Dplus : Region::Dminus;
  return Region::Dgreater;
}

int sigma_k(const IVec& k, double delta, const PartitionParams& params,
            const FrequencyVector& omega) {
  switch (classify(k, delta, params, omega)) {
    case Region::Dplus: return 1;
    case Region::Dminus: return -1;
    default: return 0;
  }
}

double delta_exit(const IVec& k, const PartitionParams& params, const FrequencyVector& omega) {
  std::int64_t d = omega.dot_p(k);
  int norm = l1_norm(k);
  if (d == 0 || norm > params.K * (1 + kBoundaryTol)) return -1.0;
  double w = std::abs(double(d)) / omega.t_bar();
  return std::max(0.0, params.rho3 * (params.K - norm) / w);
}

double s_k(const IVec& k, double delta, const PartitionParams& params,
           const FrequencyVector& omega) {
  double ex = delta_exit(k, params, omega);
  if (ex < 0) return 0.0;
  double sgn = omega.dot_p(k) > 0 ? 1.0 : -1.0;
  return sgn * std::min(delta, ex);
}

double stopping_time(const PartitionParams& params, const FrequencyVector& omega) {
  if (params.K < 1) return 0.0;
  double best = 0.0;
  for (const IVec& k : enumerate_diamond(params.K, omega.n())) {
    double ex = delta_exit(k, params, omega);
    if (ex > best) best = ex;
  }
  double bound = params.K * omega.t_bar() * params.rho3;
  if (best > bound * (1 + 1e-12))
    throw std::logic_error("stopping time exceeds K T̄ rho3");
  return best;
}

std::size_t diamond_count(double K, int n) {
  if (K < 0) return 0;
  double N = std::floor(K + 1e-12);
  // sum_j 2^j C(n,j) C(N,j)
  double total = 0;
  double cn = 1, cN = 1, pow2 = 1;
  for (int j = 0; j <= n; ++j) {
    if (j > N) break;
    total += pow2 * cn * cN;
    cn = cn * (n - j) / (j + 1);
    cN = cN * (N - j) / (j + 1);
    pow2 *= 2;
  }
  if (total > double(std::numeric_limits<std::size_t>::max() / 2))
    return std::numeric_limits<std::size_t>::max() / 2;
  return static_cast<std::size_t>(total + 0.5);
}

namespace {
void enumerate_rec(int pos, int remaining, IVec& cur, std::vector<IVec>& out) {
  if (pos == static_cast<int>(cur.size())) {
    out.push_back(cur);
    return;
  }
  for (int v = -remaining; v <= remaining; ++v) {
    cur[pos] = v;
    enumerate_rec(pos + 1, remaining - std::abs(v), cur, out);
  }
  cur[pos] = 0;
}
}  // namespace

std::vector<IVec> enumerate_diamond(double K, int n, std::size_t cap) {
  if (K < 0) throw std::invalid_argument("enumerate_diamond: K must be nonnegative");
  if (n < 1) throw std::invalid_argument("enumerate_diamond: n must be positive");
  std::size_t count = diamond_count(K, n);
  if (count > cap)
    throw std::length_error("enumerate_diamond: " + std::to_string(count) +
                            " points exceed cap " + std::to_string(cap));
  int N = static_cast<int>(std::floor(K + 1e-12));
  std::vector<IVec> out;
  out.reserve(count);
  IVec cur(n, 0);
  enumerate_rec(0, N, cur, out);
  return out;
}

DenseBox::DenseBox(int n, int radius) : n_(n), radius_(radius), stride_(n) {
  std::size_t s = 1;
  for (int i = n - 1; i >= 0; --i) {
    stride_[i] = s;
    s *= static_cast<std::size_t>(2 * radius + 1);
  }
  size_ = s;
}

bool DenseBox::contains(const IVec& k) const {
  for (int v : k)
    if (v < -radius_ || v > radius_) return false;
  return true;
}

std::size_t DenseBox::index(const IVec& k) const {
  std::size_t idx = 0;
  for (int i = 0; i < n_; ++i) idx += static_cast<std::size_t>(k[i] + radius_) * stride_[i];
  return idx;
}

IVec DenseBox::point(std::size_t idx) const {
  IVec k(n_);
  for (int i = 0; i < n_; ++i) {
    k[i] = static_cast<int>(idx / stride_[i]) - radius_;
    idx %= stride_[i];
  }
  return k;
}

}  // namespace nekh
