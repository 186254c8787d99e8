#include "nekh/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nekh {

void ConvexityConstants::validate() const {
  if (!(m_minus > 0 && m_minus <= m_plus))
    throw std::invalid_argument("convexity: need 0 < M- <= M+");
  if (!(grad_inf > 0)) throw std::invalid_argument("convexity: |∇H0|∞ must be positive");
  if (grad3_inf < 0) throw std::invalid_argument("convexity: |∇³H0|∞ must be nonnegative");
}

// ---------------------------------------------------------------- Polynomial

namespace {
// ∂^d of x^e evaluated termwise
double monomial_derivative(const std::vector<int>& e, const std::vector<int>& d, const RVec& x) {
  double v = 1;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (d[i] > e[i]) return 0;
    for (int j = 0; j < d[i]; ++j) v *= (e[i] - j);
    int p = e[i] - d[i];
    if (p > 0) v *= std::pow(x[i], p);
  }
  return v;
}
}  // namespace

Polynomial::Polynomial(int dim, std::vector<Term> terms)
    : dim_(dim), terms_(std::move(terms)), shift_(dim, 0.0) {
  for (const auto& t : terms_)
    if (static_cast<int>(t.e.size()) != dim_)
      throw std::invalid_argument("Polynomial: exponent length mismatch");
}

Polynomial Polynomial::quadratic(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double c) {
  int n = static_cast<int>(A.rows());
  if (A.cols() != n || b.size() != n) throw std::invalid_argument("quadratic: shape mismatch");
  std::vector<Term> terms;
  for (int i = 0; i < n; ++i) {
    std::vector<int> e(n, 0);
    e[i] = 2;
    if (A(i, i) != 0) terms.push_back({0.5 * A(i, i), e});
    for (int j = i + 1; j < n; ++j) {
      double s = 0.5 * (A(i, j) + A(j, i));
      if (s == 0) continue;
      std::vector<int> f(n, 0);
      f[i] = 1;
      f[j] = 1;
      terms.push_back({s, f});
    }
    if (b(i) != 0) {
      std::vector<int> g(n, 0);
      g[i] = 1;
      terms.push_back({b(i), g});
    }
  }
  if (c != 0) terms.push_back({c, std::vector<int>(n, 0)});
  return Polynomial(n, std::move(terms));
}

Polynomial Polynomial::shifted(const RVec& origin) const {
  Polynomial p = *this;
  for (int i = 0; i < dim_; ++i) p.shift_[i] += origin[i];
  return p;
}

RVec Polynomial::moved(const RVec& I) const {
  if (static_cast<int>(I.size()) != dim_) throw std::invalid_argument("Polynomial: bad point");
  RVec x(I);
  for (int i = 0; i < dim_; ++i) x[i] += shift_[i];
  return x;
}

double Polynomial::value(const RVec& I) const {
  RVec x = moved(I);
  std::vector<int> d(dim_, 0);
  double s = 0;
  for (const auto& t : terms_) s += t.c * monomial_derivative(t.e, d, x);
  return s;
}

RVec Polynomial::gradient(const RVec& I) const {
  RVec x = moved(I);
  RVec g(dim_, 0.0);
  std::vector<int> d(dim_, 0);
  for (int i = 0; i < dim_; ++i) {
    d[i] = 1;
    for (const auto& t : terms_) g[i] += t.c * monomial_derivative(t.e, d, x);
    d[i] = 0;
  }
  return g;
}

Eigen::MatrixXd Polynomial::hessian(const RVec& I) const {
  RVec x = moved(I);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim_, dim_);
  std::vector<int> d(dim_, 0);
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) {
      d[i] += 1;
      d[j] += 1;
      double s = 0;
      for (const auto& t : terms_) s += t.c * monomial_derivative(t.e, d, x);
      H(i, j) = H(j, i) = s;
      d[i] -= 1;
      d[j] -= 1;
    }
  return H;
}

double Polynomial::third_sup(const RVec& I) const {
  RVec x = moved(I);
  std::vector<int> d(dim_, 0);
  double best = 0;
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j)
      for (int k = j; k < dim_; ++k) {
        d[i] += 1;
        d[j] += 1;
        d[k] += 1;
        double s = 0;
        for (const auto& t : terms_) s += t.c * monomial_derivative(t.e, d, x);
        best = std::max(best, std::abs(s));
        d[i] -= 1;
        d[j] -= 1;
        d[k] -= 1;
      }
  return best;
}

int Polynomial::degree() const {
  int deg = 0;
  for (const auto& t : terms_) {
    int s = 0;
    for (int v : t.e) s += v;
    deg = std::max(deg, s);
  }
  return deg;
}

// ---------------------------------------------------------------- SlowGrid

SlowGrid::SlowGrid(RVec lo, RVec hi, std::vector<int> points)
    : lo_(std::move(lo)), hi_(std::move(hi)), points_(std::move(points)) {
  if (lo_.size() != hi_.size() || lo_.size() != points_.size())
    throw std::invalid_argument("SlowGrid: shape mismatch");
  int d = dim();
  stride_.assign(d, 1);
  size_ = 1;
  for (int j = d - 1; j >= 0; --j) {
    if (points_[j] < 1) throw std::invalid_argument("SlowGrid: need at least one point");
    if (points_[j] > 1 && !(hi_[j] > lo_[j])) throw std::invalid_argument("SlowGrid: empty range");
    stride_[j] = size_;
    size_ *= static_cast<std::size_t>(points_[j]);
  }
}

SlowGrid SlowGrid::box(int dim, double half_width, int points) {
  return SlowGrid(RVec(dim, -half_width), RVec(dim, half_width), std::vector<int>(dim, points));
}

SlowGrid SlowGrid::single(int dim) {
  return SlowGrid(RVec(dim, 0.0), RVec(dim, 0.0), std::vector<int>(dim, 1));
}

double SlowGrid::spacing(int j) const {
  return points_[j] > 1 ? (hi_[j] - lo_[j]) / (points_[j] - 1) : 0.0;
}

RVec SlowGrid::point(std::size_t idx) const {
  RVec x(dim());
  for (int j = 0; j < dim(); ++j) {
    int c = coord(idx, j);
    x[j] = points_[j] > 1 ? lo_[j] + c * spacing(j) : 0.5 * (lo_[j] + hi_[j]);
  }
  return x;
}

Coef grid_derivative(const SlowGrid& grid, const Coef& f, int j) {
  int N = grid.points(j);
  Coef out(f.size(), cplx(0, 0));
  if (N == 1) return out;
  if (N < 5) throw std::invalid_argument("grid_derivative: need >= 5 points per differentiated axis");
  double h12 = 12.0 * grid.spacing(j);
  std::size_t s = grid.stride(j);
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    int i = grid.coord(idx, j);
    auto at = [&](int c) { return f[idx + static_cast<std::ptrdiff_t>(c - i) * static_cast<std::ptrdiff_t>(s)]; };
    cplx v;
    if (i >= 2 && i <= N - 3)
      v = at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2);
    else if (i == 0)
      v = -25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4);
    else if (i == 1)
      v = -3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4);
    else if (i == N - 2)
      v = 3.0 * at(N - 1) + 10.0 * at(N - 2) - 18.0 * at(N - 3) + 6.0 * at(N - 4) - at(N - 5);
    else
      v = 25.0 * at(N - 1) - 48.0 * at(N - 2) + 36.0 * at(N - 3) - 16.0 * at(N - 4) + 3.0 * at(N - 5);
    out[idx] = v / h12;
  }
  return out;
}

// ---------------------------------------------------------------- FourierField

FourierField::FourierField(int n_, SlowGrid grid_, int truncation_radius_)
    : n(n_), grid(std::move(grid_)), truncation_radius(truncation_radius_) {}

void FourierField::set(const IVec& k, Coef c) {
  if (static_cast<int>(k.size()) != n) throw std::invalid_argument("FourierField: mode dimension");
  if (l1_norm(k) > truncation_radius)
    throw std::invalid_argument("FourierField: mode beyond truncation radius");
  if (c.size() != grid.size()) throw std::invalid_argument("FourierField: coefficient size");
  modes[k] = std::move(c);
}

void FourierField::set_constant(const IVec& k, cplx c) { set(k, Coef(grid.size(), c)); }

double FourierField::mode_sup(const IVec& k) const {
  auto it = modes.find(k);
  if (it == modes.end()) return 0;
  double s = 0;
  for (const cplx& v : it->second) s = std::max(s, std::abs(v));
  return s;
}

double fourier_norm(const FourierField& f, double rho_prime, double rho_max) {
  if (rho_prime < 0) throw std::invalid_argument("fourier_norm: rho' must be nonnegative");
  if (rho_prime > rho_max) throw std::domain_error("fourier_norm: rho' exceeds analyticity width");
  std::vector<double> acc(f.grid.size(), 0.0);
  for (const auto& [k, c] : f.modes) {
    double w = std::exp(l1_norm(k) * rho_prime);
    for (std::size_t i = 0; i < c.size(); ++i) acc[i] += std::abs(c[i]) * w;
  }
  double best = 0;
  for (double v : acc) best = std::max(best, v);
  return best;
}

double fourier_norm_with_gradient(const FourierField& f, double rho_prime) {
  double best = fourier_norm(f, rho_prime);
  for (int j = 0; j < f.n; ++j) {
    FourierField d(f.n, f.grid, f.truncation_radius);
    for (const auto& [k, c] : f.modes) {
      Coef dc(c);
      for (auto& v : dc) v *= cplx(0, k[j]);
      d.modes[k] = std::move(dc);
    }
    best = std::max(best, fourier_norm(d, rho_prime));
  }
  for (int j = 0; j < f.grid.dim(); ++j) {
    if (f.grid.points(j) < 5) continue;
    FourierField d(f.n, f.grid, f.truncation_radius);
    for (const auto& [k, c] : f.modes) d.modes[k] = grid_derivative(f.grid, c, j);
    best = std::max(best, fourier_norm(d, rho_prime));
  }
  return best;
}

std::pair<FourierField, FourierField> split_resonant(const FourierField& f,
                                                     const FrequencyVector& omega) {
  FourierField res(f.n, f.grid, f.truncation_radius), non(f.n, f.grid, f.truncation_radius);
  for (const auto& [k, c] : f.modes) (omega.resonant(k) ? res : non).modes[k] = c;
  return {std::move(res), std::move(non)};
}

// ---------------------------------------------------------------- spec, G

void HamiltonianSpec::validate() const {
  if (n < 2) throw std::invalid_argument("spec: n must be >= 2");
  if (m < 0) throw std::invalid_argument("spec: m must be >= 0");
  if (!(rho > 0) || !(sigma > 0)) throw std::invalid_argument("spec: rho and sigma must be positive");
  if (h0.dim() != n) throw std::invalid_argument("spec: H0 dimension differs from n");
  if (perturbation.n != n) throw std::invalid_argument("spec: perturbation dimension differs from n");
  convexity.validate();
  if (!std::isfinite(fourier_norm(perturbation, rho)))
    throw std::invalid_argument("spec: perturbation norm at rho is not finite");
}

GPart::GPart(Polynomial h0, RVec omega) : h0_(std::move(h0)), omega_(std::move(omega)) {
  h0_origin_ = h0_.value(RVec(omega_.size(), 0.0));
}

double GPart::value(const RVec& I) const {
  double s = h0_.value(I) - h0_origin_;
  for (std::size_t i = 0; i < I.size(); ++i) s -= omega_[i] * I[i];
  return s;
}

RVec GPart::grad(const RVec& I) const {
  RVec g = h0_.gradient(I);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= omega_[i];
  return g;
}

GPart taylor_split(const HamiltonianSpec& spec, const FrequencyVector& omega, double R,
                   int resolution) {
  RVec w = omega.omega();
  RVec g0 = spec.h0.gradient(RVec(spec.n, 0.0));
  for (int i = 0; i < spec.n; ++i)
    if (std::abs(g0[i] - w[i]) > 1e-10)
      throw std::invalid_argument("taylor_split: ∇H0(0) differs from ω* (translate the actions first)");
  GPart g(spec.h0, w);
  SlowGrid grid = SlowGrid::box(spec.n, R, std::max(resolution, 2));
  double mp = spec.convexity.m_plus;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    RVec I = grid.point(idx);
    double r2 = 0;
    for (double v : I) r2 += v * v;
    if (r2 > R * R * (1 + 1e-12)) continue;
    g.max_abs = std::max(g.max_abs, std::abs(g.value(I)));
    RVec gr = g.grad(I);
    double s = 0;
    for (double v : gr) s += v * v;
    g.max_grad = std::max(g.max_grad, std::sqrt(s));
  }
  double tol = 1e-12 * std::max(1.0, mp * R * R);
  if (g.max_abs > mp * R * R / 2 + tol || g.max_grad > mp * R + tol)
    throw std::runtime_error("taylor_split: |G| or |∇G| exceeds the M+ bound (bad convexity constants)");
  return g;
}

ConvexityConstants estimate_convexity(const HamiltonianSpec& spec, int grid_resolution) {
  if (grid_resolution < 2) throw std::invalid_argument("estimate_convexity: resolution must be >= 2");
  if (spec.action_lo.size() != static_cast<std::size_t>(spec.n) ||
      spec.action_hi.size() != static_cast<std::size_t>(spec.n))
    throw std::invalid_argument("estimate_convexity: action box not set");
  SlowGrid grid(spec.action_lo, spec.action_hi, std::vector<int>(spec.n, grid_resolution));
  ConvexityConstants c;
  c.m_minus = std::numeric_limits<double>::infinity();
  c.m_plus = 0;
  c.grad_inf = 0;
  c.grad3_inf = 0;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    RVec I = grid.point(idx);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec.h0.hessian(I));
    c.m_minus = std::min(c.m_minus, es.eigenvalues().minCoeff());
    c.m_plus = std::max(c.m_plus, es.eigenvalues().maxCoeff());
    for (double v : spec.h0.gradient(I)) c.grad_inf = std::max(c.grad_inf, std::abs(v));
    c.grad3_inf = std::max(c.grad3_inf, spec.h0.third_sup(I));
  }
  if (!(c.m_minus > 0))
    throw std::runtime_error("estimate_convexity: Hessian not positive definite on the grid (min Rayleigh quotient " +
                             std::to_string(c.m_minus) + ")");
  return c;
}

}  // namespace nekh
