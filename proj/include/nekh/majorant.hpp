#pragma once

#include <functional>
#include <map>
#include <vector>

namespace nekh {

// Truncated multivariate power series with real coefficients.
class MajorantSeries {
 public:
  using Index = std::vector<int>;

  MajorantSeries() = default;
  MajorantSeries(int dim, int degree_cap);

  int dim() const { return dim_; }
  int degree_cap() const { return cap_; }
  bool truncated_tail() const { return tail_; }
  const std::map<Index, double>& coeffs() const { return coeffs_; }

  double coeff(const Index& beta) const;
  void set(const Index& beta, double c);
  // convenience for dim == 1
  double operator[](int j) const { return coeff(Index{j}); }

  MajorantSeries abs() const;
  MajorantSeries scaled(double s) const;
  MajorantSeries operator+(const MajorantSeries& o) const;
  MajorantSeries operator*(const MajorantSeries& o) const;
  MajorantSeries deriv(int j) const;
  MajorantSeries with_cap(int cap) const;

  // 1/(b - z) in one variable
  static MajorantSeries geometric(double b, int cap);
  static MajorantSeries monomial(int dim, const Index& beta, double c, int cap);

 private:
  int dim_ = 1;
  int cap_ = 24;
  bool tail_ = false;
  std::map<Index, double> coeffs_;
};

constexpr int kDefaultSeriesCap = 24;

// g_β ≥ |f_β| for every β up to the smaller cap
bool majorizes(const MajorantSeries& g, const MajorantSeries& f);

// Trapezoid rule in the parameter over equally spaced samples.
MajorantSeries integrate_parameter(const std::vector<MajorantSeries>& samples, double step);

// b c / (b - (z_1 + ... + z_dims)), coefficients c b^{-|β|} multinomial(β)
MajorantSeries bound_to_majorant(double c, double b, int dims, int cap = kDefaultSeriesCap);

// (|l|+|k|) F G + (n + 2m) ∂_Y (F G) in the single variable Y
MajorantSeries majorant_commutator(const MajorantSeries& F, const MajorantSeries& G,
                                   int l_norm, int k_norm, int n, int m);

struct MajorantSolution {
  double sigma = 1;
  double K = 1;
  std::function<double(double)> A;  // A(δ), nondecreasing, A(0) = 0
  std::function<double(double)> a;  // dA/dδ; only needed by the PDE check
  std::function<double(double)> B;  // defaults to A when empty
  double B_at(double delta) const { return B ? B(delta) : A(delta); }
};

MajorantSolution constant_rate_solution(double sigma, double K, double rate);

double eval_W(const MajorantSolution& sol, double Y, double delta);
double eval_W_Y(const MajorantSolution& sol, double Y, double delta);
double eval_Wk(const MajorantSolution& sol, double Y, double delta, double k_norm);
double eval_Wk_Y(const MajorantSolution& sol, double Y, double delta, double k_norm);

struct MajorantGrid {
  std::vector<double> Y;
  std::vector<double> delta;
  std::vector<double> k_norms;
  std::vector<double> skip_delta;  // kinks of a(δ); points within 2h are skipped
};

struct PdeResidual {
  double w_residual = 0;
  double wk_residual = 0;
  std::size_t points = 0;
  double worst() const { return w_residual > wk_residual ? w_residual : wk_residual; }
};

// Central differences at step h scaled by max(1, |value|).
PdeResidual check_W_pde(const MajorantSolution& sol, const MajorantGrid& grid, double h = 1e-4);

struct TrReport {
  bool item[5] = {true, true, true, true, true};
  double worst[5] = {0, 0, 0, 0, 0};  // largest lhs - rhs seen per item (relative)
  std::size_t checks = 0;
  bool all() const { return item[0] && item[1] && item[2] && item[3] && item[4]; }
};

TrReport check_tr_properties(const MajorantSolution& sol, const MajorantGrid& grid);

double solve_burgers_1dof(double sigma, double C, double Y, double delta);

// f_δ = M f + N ∂_Y f over a vector of one-variable series, integrated by RK4 next to
// the majorant system with |M| ≤ Mbar and |N| ≤ Nbar entrywise. Returns the number of
// output times at which some component of the majorant fails to dominate.
struct LinearMajorantRun {
  std::size_t outputs = 0;
  std::size_t violations = 0;
};
LinearMajorantRun linear_majorant_flow(const std::vector<std::vector<double>>& M,
                                       const std::vector<std::vector<double>>& N,
                                       const std::vector<std::vector<double>>& Mbar,
                                       const std::vector<std::vector<double>>& Nbar,
                                       const std::vector<MajorantSeries>& f0,
                                       const std::vector<MajorantSeries>& F0, double t_end,
                                       int steps, int output_every);

}  // namespace nekh
