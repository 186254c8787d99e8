#include "nekh/majorant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nekh {

namespace {
int total_degree(const MajorantSeries::Index& b) {
  int s = 0;
  for (int v : b) s += v;
  return s;
}

void enumerate_indices(int dim, int cap, MajorantSeries::Index& cur, int pos, int left,
                       std::vector<MajorantSeries::Index>& out) {
  if (pos == dim) {
    out.push_back(cur);
    return;
  }
  for (int v = 0; v <= left; ++v) {
    cur[pos] = v;
    enumerate_indices(dim, cap, cur, pos + 1, left - v, out);
  }
  cur[pos] = 0;
}

constexpr double kRelTol = 1e-12;
}  // namespace

MajorantSeries::MajorantSeries(int dim, int degree_cap) : dim_(dim), cap_(degree_cap) {
  if (dim < 1 || degree_cap < 0) throw std::invalid_argument("MajorantSeries: bad shape");
}

double MajorantSeries::coeff(const Index& beta) const {
  auto it = coeffs_.find(beta);
  return it == coeffs_.end() ? 0.0 : it->second;
}

void MajorantSeries::set(const Index& beta, double c) {
  if (static_cast<int>(beta.size()) != dim_) throw std::invalid_argument("set: index dimension");
  if (total_degree(beta) > cap_) {
    if (c != 0) tail_ = true;
    return;
  }
  if (c == 0)
    coeffs_.erase(beta);
  else
    coeffs_[beta] = c;
}

MajorantSeries MajorantSeries::abs() const {
  MajorantSeries r = *this;
  for (auto& [b, c] : r.coeffs_) c = std::abs(c);
  return r;
}

MajorantSeries MajorantSeries::scaled(double s) const {
  MajorantSeries r(dim_, cap_);
  r.tail_ = tail_;
  for (const auto& [b, c] : coeffs_) r.set(b, c * s);
  return r;
}

MajorantSeries MajorantSeries::operator+(const MajorantSeries& o) const {
  if (o.dim_ != dim_) throw std::invalid_argument("series sum: dimension mismatch");
  MajorantSeries r(dim_, std::min(cap_, o.cap_));
  r.tail_ = tail_ || o.tail_;
  for (const auto& [b, c] : coeffs_) r.set(b, c);
  for (const auto& [b, c] : o.coeffs_) r.set(b, r.coeff(b) + c);
  return r;
}

MajorantSeries MajorantSeries::operator*(const MajorantSeries& o) const {
  if (o.dim_ != dim_) throw std::invalid_argument("series product: dimension mismatch");
  MajorantSeries r(dim_, std::min(cap_, o.cap_));
  r.tail_ = tail_ || o.tail_;
  Index sum(dim_);
  for (const auto& [b1, c1] : coeffs_) {
    for (const auto& [b2, c2] : o.coeffs_) {
      for (int i = 0; i < dim_; ++i) sum[i] = b1[i] + b2[i];
      if (total_degree(sum) > r.cap_) {
        r.tail_ = true;
        continue;
      }
      r.coeffs_[sum] += c1 * c2;
    }
  }
  return r;
}

MajorantSeries MajorantSeries::deriv(int j) const {
  if (j < 0 || j >= dim_) throw std::out_of_range("deriv: variable index");
  MajorantSeries r(dim_, cap_);
  r.tail_ = tail_;
  for (const auto& [b, c] : coeffs_) {
    if (b[j] == 0) continue;
    Index nb = b;
    nb[j] -= 1;
    r.set(nb, c * b[j]);
  }
  return r;
}

MajorantSeries MajorantSeries::with_cap(int cap) const {
  MajorantSeries r(dim_, cap);
  r.tail_ = tail_;
  for (const auto& [b, c] : coeffs_) r.set(b, c);
  return r;
}

MajorantSeries MajorantSeries::geometric(double b, int cap) {
  if (!(b > 0)) throw std::invalid_argument("geometric: radius must be positive");
  MajorantSeries r(1, cap);
  double c = 1.0 / b;
  for (int j = 0; j <= cap; ++j) {
    r.set({j}, c);
    c /= b;
  }
  return r;
}

MajorantSeries MajorantSeries::monomial(int dim, const Index& beta, double c, int cap) {
  MajorantSeries r(dim, cap);
  r.set(beta, c);
  return r;
}

bool majorizes(const MajorantSeries& g, const MajorantSeries& f) {
  if (g.dim() != f.dim()) throw std::invalid_argument("majorizes: dimension mismatch");
  int cap = std::min(g.degree_cap(), f.degree_cap());
  for (const auto& [b, c] : f.coeffs()) {
    if (total_degree(b) > cap) continue;
    double gb = g.coeff(b);
    if (gb < std::abs(c) - kRelTol * std::abs(c)) return false;
  }
  return true;
}

MajorantSeries integrate_parameter(const std::vector<MajorantSeries>& samples, double step) {
  if (samples.empty()) throw std::invalid_argument("integrate_parameter: no samples");
  MajorantSeries r(samples[0].dim(), samples[0].degree_cap());
  if (samples.size() == 1) return r;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double w = (i == 0 || i + 1 == samples.size()) ? 0.5 * step : step;
    r = r + samples[i].scaled(w);
  }
  return r;
}

MajorantSeries bound_to_majorant(double c, double b, int dims, int cap) {
  if (c < 0 || !(b > 0) || dims < 1) throw std::invalid_argument("bound_to_majorant: bad inputs");
  MajorantSeries r(dims, cap);
  if (c == 0) return r;
  std::vector<MajorantSeries::Index> idx;
  MajorantSeries::Index cur(dims, 0);
  enumerate_indices(dims, cap, cur, 0, cap, idx);
  for (const auto& beta : idx) {
    int d = total_degree(beta);
    // multinomial(d; β) via log-gamma keeps large caps finite
    double log_multi = std::lgamma(d + 1.0);
    for (int v : beta) log_multi -= std::lgamma(v + 1.0);
    r.set(beta, c * std::exp(log_multi - d * std::log(b)));
  }
  return r;
}

MajorantSeries majorant_commutator(const MajorantSeries& F, const MajorantSeries& G, int l_norm,
                                   int k_norm, int n, int m) {
  if (F.dim() != 1 || G.dim() != 1) throw std::invalid_argument("commutator: series must be in Y");
  MajorantSeries fg = F * G;
  return fg.scaled(l_norm + k_norm) + fg.deriv(0).scaled(n + 2 * m);
}

MajorantSolution constant_rate_solution(double sigma, double K, double rate) {
  MajorantSolution s;
  s.sigma = sigma;
  s.K = K;
  s.A = [rate](double d) { return rate * d; };
  s.a = [rate](double) { return rate; };
  return s;
}

namespace {
double discriminant_root(const MajorantSolution& sol, double Y, double delta) {
  double s = sol.sigma - Y;
  double disc = s * s - 4 * sol.A(delta);
  if (disc < 0 || s <= 0)
    throw std::domain_error("majorant: flow time exceeded ((σ-Y)² < 4A(δ))");
  return std::sqrt(disc);
}
}  // namespace

double eval_W(const MajorantSolution& sol, double Y, double delta) {
  double D = discriminant_root(sol, Y, delta);
  return 2.0 / ((sol.sigma - Y) + D);
}

double eval_W_Y(const MajorantSolution& sol, double Y, double delta) {
  double D = discriminant_root(sol, Y, delta);
  double W = 2.0 / ((sol.sigma - Y) + D);
  if (D == 0) throw std::domain_error("majorant: W_Y singular on the discriminant boundary");
  return W / D;
}

double eval_Wk(const MajorantSolution& sol, double Y, double delta, double k_norm) {
  double W = eval_W(sol, Y, delta);
  if (k_norm <= sol.K) return W;
  return W * std::exp(W * sol.B_at(delta) * k_norm / sol.K);
}

double eval_Wk_Y(const MajorantSolution& sol, double Y, double delta, double k_norm) {
  double WY = eval_W_Y(sol, Y, delta);
  if (k_norm <= sol.K) return WY;
  double W = eval_W(sol, Y, delta);
  double kappa = sol.B_at(delta) * k_norm / sol.K;
  return WY * std::exp(W * kappa) * (1 + W * kappa);
}

PdeResidual check_W_pde(const MajorantSolution& sol, const MajorantGrid& grid, double h) {
  if (!sol.a) throw std::invalid_argument("check_W_pde: rate a(δ) required");
  PdeResidual r;
  for (double d : grid.delta) {
    if (d - h < 0) continue;
    bool near_kink = false;
    for (double s : grid.skip_delta)
      if (std::abs(d - s) < 2 * h) near_kink = true;
    if (near_kink) continue;
    double a = sol.a(d);
    for (double Y : grid.Y) {
      double W_d = (eval_W(sol, Y, d + h) - eval_W(sol, Y, d - h)) / (2 * h);
      double W_y = (eval_W(sol, Y + h, d) - eval_W(sol, Y - h, d)) / (2 * h);
      double W = eval_W(sol, Y, d);
      double rhs = a * W * W_y;
      r.w_residual = std::max(r.w_residual, std::abs(W_d - rhs) / std::max(1.0, std::abs(rhs)));
      for (double k : grid.k_norms) {
        double Wk = eval_Wk(sol, Y, d, k);
        double Wk_d = (eval_Wk(sol, Y, d + h, k) - eval_Wk(sol, Y, d - h, k)) / (2 * h);
        double Wk_y = (eval_Wk(sol, Y + h, d, k) - eval_Wk(sol, Y - h, d, k)) / (2 * h);
        double rhs_k = k <= sol.K ? a * W * Wk_y : a * (W * Wk_y + k / sol.K * W * Wk);
        r.wk_residual =
            std::max(r.wk_residual, std::abs(Wk_d - rhs_k) / std::max(1.0, std::abs(rhs_k)));
      }
      ++r.points;
    }
  }
  return r;
}

TrReport check_tr_properties(const MajorantSolution& sol, const MajorantGrid& grid) {
  TrReport rep;
  auto record = [&rep](int item, double lhs, double rhs) {
    double excess = (lhs - rhs) / std::max(std::abs(rhs), 1e-300);
    rep.worst[item] = std::max(rep.worst[item], excess);
    if (lhs > rhs * (1 + kRelTol)) rep.item[item] = false;
    ++rep.checks;
  };
  double sigma = sol.sigma;
  for (double d : grid.delta) {
    for (double Y : grid.Y) {
      double s = sigma - Y;
      if (s <= 0 || s * s - 4 * sol.A(d) <= 0) continue;
      double W = eval_W(sol, Y, d);
      double WY = eval_W_Y(sol, Y, d);
      record(0, 1.0 / s, W);
      record(0, W, WY);
      for (std::size_t i = 0; i < grid.k_norms.size(); ++i) {
        double k = grid.k_norms[i];
        double Wk = eval_Wk(sol, Y, d, k);
        double WkY = eval_Wk_Y(sol, Y, d, k);
        record(1, W, Wk);
        record(2, WY * Wk, W * WkY);
        record(3, Wk, W * std::exp(sigma * k / sol.K));
        for (std::size_t j = 0; j < grid.k_norms.size(); ++j) {
          double kp = grid.k_norms[j];
          if (!(k < kp)) continue;
          record(4, eval_Wk(sol, Y, d, kp), Wk * std::exp(sigma * (kp - k) / sol.K));
        }
      }
    }
  }
  return rep;
}

double solve_burgers_1dof(double sigma, double C, double Y, double delta) {
  double s = sigma - Y;
  double disc = s * s - 8 * sigma * C * delta;
  if (disc < 0 || s <= 0)
    throw std::domain_error("burgers: maximal flow time σ/(8C) exceeded");
  return 2 * sigma / (s + std::sqrt(disc));
}

namespace {
using SeriesVec = std::vector<MajorantSeries>;

SeriesVec apply_linear(const std::vector<std::vector<double>>& M,
                       const std::vector<std::vector<double>>& N, const SeriesVec& f) {
  std::size_t d = f.size();
  SeriesVec out;
  out.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    MajorantSeries acc(1, f[0].degree_cap());
    for (std::size_t j = 0; j < d; ++j) {
      if (M[i][j] != 0) acc = acc + f[j].scaled(M[i][j]);
      if (!N.empty() && N[i][j] != 0) acc = acc + f[j].deriv(0).scaled(N[i][j]);
    }
    out.push_back(acc);
  }
  return out;
}

SeriesVec axpy(const SeriesVec& x, const SeriesVec& y, double s) {
  SeriesVec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i].scaled(s);
  return r;
}

SeriesVec rk4_step(const std::vector<std::vector<double>>& M,
                   const std::vector<std::vector<double>>& N, const SeriesVec& f, double h) {
  SeriesVec k1 = apply_linear(M, N, f);
  SeriesVec k2 = apply_linear(M, N, axpy(f, k1, h / 2));
  SeriesVec k3 = apply_linear(M, N, axpy(f, k2, h / 2));
  SeriesVec k4 = apply_linear(M, N, axpy(f, k3, h));
  SeriesVec r = axpy(f, k1, h / 6);
  r = axpy(r, k2, h / 3);
  r = axpy(r, k3, h / 3);
  return axpy(r, k4, h / 6);
}
}  // namespace

LinearMajorantRun linear_majorant_flow(const std::vector<std::vector<double>>& M,
                                       const std::vector<std::vector<double>>& N,
                                       const std::vector<std::vector<double>>& Mbar,
                                       const std::vector<std::vector<double>>& Nbar,
                                       const std::vector<MajorantSeries>& f0,
                                       const std::vector<MajorantSeries>& F0, double t_end,
                                       int steps, int output_every) {
  if (f0.size() != F0.size() || f0.empty() || steps < 1 || output_every < 1)
    throw std::invalid_argument("linear_majorant_flow: bad inputs");
  SeriesVec f = f0, F = F0;
  double h = t_end / steps;
  LinearMajorantRun run;
  auto check = [&]() {
    ++run.outputs;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (!majorizes(F[i], f[i])) {
        ++run.violations;
        return;
      }
  };
  check();
  for (int s = 1; s <= steps; ++s) {
    f = rk4_step(M, N, f, h);
    F = rk4_step(Mbar, Nbar, F, h);
    if (s % output_every == 0 || s == steps) check();
  }
  return run;
}

}  // namespace nekh
