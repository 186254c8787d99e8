#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace nekh {

using IVec = std::vector<int>;
using RVec = std::vector<double>;

int l1_norm(const IVec& k);
IVec operator-(const IVec& a, const IVec& b);
IVec operator+(const IVec& a, const IVec& b);

// Rational frequency p / t_bar with gcd(p) = 1.
class FrequencyVector {
 public:
  FrequencyVector(IVec p, double t_bar);

  int n() const { return static_cast<int>(p_.size()); }
  const IVec& p() const { return p_; }
  double t_bar() const { return t_bar_; }
  double period() const;
  RVec omega() const;
  double omega_norm2() const;

  // exact integer <k, p>
  std::int64_t dot_p(const IVec& k) const;
  double dot(const IVec& k) const { return static_cast<double>(dot_p(k)) / t_bar_; }
  bool resonant(const IVec& k) const { return dot_p(k) == 0; }

 private:
  IVec p_;
  double t_bar_;
};

struct PartitionParams {
  double rho1 = 0, rho2 = 0, rho3 = 0;
  double K = 0;
  double R = 0;

  double rho() const { return rho1 + 2 * rho2 + rho3; }
  // K = rho1 / (rho3 M+ R T̄)
  static PartitionParams from_split(double rho1, double rho2, double rho3, double m_plus, double R,
                                    double t_bar);
  // Direct construction for lattice-only work where K is a free parameter.
  static PartitionParams with_cutoff(double rho1, double rho2, double rho3, double K);
  void validate(double rho, double m_plus, double t_bar) const;
};

enum class Region { Dplus, Dminus, D0, Dgreater };
const char* region_name(Region r);

Region classify(const IVec& k, double delta, const PartitionParams& params,
                const FrequencyVector& omega);
int sigma_k(const IVec& k, double delta, const PartitionParams& params,
            const FrequencyVector& omega);

// Time at which a nonresonant in-diamond k leaves D±; negative when k is resonant or
// outside the diamond already at delta = 0.
double delta_exit(const IVec& k, const PartitionParams& params, const FrequencyVector& omega);
double s_k(const IVec& k, double delta, const PartitionParams& params,
           const FrequencyVector& omega);
double stopping_time(const PartitionParams& params, const FrequencyVector& omega);

inline constexpr std::size_t kDefaultEnumerationCap = 100000000;

std::size_t diamond_count(double K, int n);
std::vector<IVec> enumerate_diamond(double K, int n,
                                    std::size_t cap = kDefaultEnumerationCap);

// Dense row-major index for the cube [-radius, radius]^n.
class DenseBox {
 public:
  DenseBox(int n, int radius);
  int n() const { return n_; }
  int radius() const { return radius_; }
  std::size_t size() const { return size_; }
  bool contains(const IVec& k) const;
  std::size_t index(const IVec& k) const;
  IVec point(std::size_t idx) const;

 private:
  int n_, radius_;
  std::size_t size_;
  std::vector<std::size_t> stride_;
};

}  // namespace nekh
