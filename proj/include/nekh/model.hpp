#pragma once

#include <complex>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nekh/lattice.hpp"

namespace nekh {

using cplx = std::complex<double>;
using Coef = std::vector<cplx>;  // values on a SlowGrid

struct ConvexityConstants {
  double m_minus = 1;
  double m_plus = 1;
  double grad_inf = 1;   // |∇H0|∞
  double grad3_inf = 0;  // |∇³H0|∞
  void validate() const;
};

// Real multivariate polynomial, evaluated at (I + shift).
class Polynomial {
 public:
  struct Term {
    double c;
    std::vector<int> e;
  };

  Polynomial() = default;
  Polynomial(int dim, std::vector<Term> terms);
  // 0.5 IᵀAI + bᵀI + c
  static Polynomial quadratic(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double c = 0);

  int dim() const { return dim_; }
  const std::vector<Term>& terms() const { return terms_; }
  const RVec& shift() const { return shift_; }
  Polynomial shifted(const RVec& origin) const;

  double value(const RVec& I) const;
  RVec gradient(const RVec& I) const;
  Eigen::MatrixXd hessian(const RVec& I) const;
  double third_sup(const RVec& I) const;  // max |∂³/∂i∂j∂k|
  int degree() const;

 private:
  RVec moved(const RVec& I) const;
  int dim_ = 0;
  std::vector<Term> terms_;
  RVec shift_;
};

// Tensor-product sample grid over the slow variables (I, x, y).
class SlowGrid {
 public:
  SlowGrid() = default;
  SlowGrid(RVec lo, RVec hi, std::vector<int> points);
  static SlowGrid box(int dim, double half_width, int points);
  static SlowGrid single(int dim);

  int dim() const { return static_cast<int>(lo_.size()); }
  std::size_t size() const { return size_; }
  RVec point(std::size_t idx) const;
  int points(int j) const { return points_[j]; }
  double spacing(int j) const;
  std::size_t stride(int j) const { return stride_[j]; }
  int coord(std::size_t idx, int j) const {
    return static_cast<int>((idx / stride_[j]) % static_cast<std::size_t>(points_[j]));
  }
  const RVec& lo() const { return lo_; }
  const RVec& hi() const { return hi_; }

 private:
  RVec lo_, hi_;
  std::vector<int> points_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 1;
};

// 4th-order finite-difference partial derivative along grid axis j.
Coef grid_derivative(const SlowGrid& grid, const Coef& f, int j);

struct FourierField {
  int n = 0;
  SlowGrid grid;
  std::map<IVec, Coef> modes;
  int truncation_radius = 0;

  FourierField() = default;
  FourierField(int n, SlowGrid grid, int truncation_radius);
  void set(const IVec& k, Coef c);
  void set_constant(const IVec& k, cplx c);
  bool empty() const { return modes.empty(); }
  std::size_t size() const { return modes.size(); }
  // max over grid of |coefficient|
  double mode_sup(const IVec& k) const;
};

double fourier_norm(const FourierField& f, double rho_prime,
                    double rho_max = std::numeric_limits<double>::infinity());
// max(‖f‖, max_j ‖∂_j f‖) over θ-derivatives and slow-variable derivatives
double fourier_norm_with_gradient(const FourierField& f, double rho_prime);

std::pair<FourierField, FourierField> split_resonant(const FourierField& f,
                                                     const FrequencyVector& omega);

struct HamiltonianSpec {
  int n = 2;
  int m = 0;
  Polynomial h0;
  FourierField perturbation;
  double rho = 1;
  double sigma = 1;
  ConvexityConstants convexity;
  RVec action_lo, action_hi;  // box standing in for the action domain
  void validate() const;
};

class GPart {
 public:
  GPart(Polynomial h0, RVec omega);
  double value(const RVec& I) const;
  RVec grad(const RVec& I) const;
  double max_abs = 0;   // max |G| on the certification grid
  double max_grad = 0;  // max |∇G|₂ on the certification grid
  const RVec& omega() const { return omega_; }

 private:
  Polynomial h0_;
  RVec omega_;
  double h0_origin_ = 0;
};

GPart taylor_split(const HamiltonianSpec& spec, const FrequencyVector& omega, double R,
                   int resolution = 11);

ConvexityConstants estimate_convexity(const HamiltonianSpec& spec, int grid_resolution);

}  // namespace nekh
