#include "nekh/diophantine.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nekh {

ApproximationResult dirichlet_classic(const RVec& alpha, double Q) {
  if (!(Q > 1)) throw std::invalid_argument("dirichlet_classic: Q must exceed 1");
  if (alpha.empty()) throw std::invalid_argument("dirichlet_classic: empty alpha");
  int n = static_cast<int>(alpha.size());
  double bound = std::pow(Q, -1.0 / n);
  for (long q = 1; q < Q; ++q) {
    double worst = 0;
    std::vector<long> p(n);
    for (int i = 0; i < n; ++i) {
      double x = q * alpha[i];
      p[i] = std::lround(x);  // half away from zero
      worst = std::max(worst, std::abs(x - p[i]));
    }
    if (worst <= bound) {
      ApproximationResult r;
      r.q = q;
      r.p = p;
      r.t_bar = static_cast<double>(q);
      r.alpha_star.resize(n);
      for (int i = 0; i < n; ++i) r.alpha_star[i] = double(p[i]) / q;
      r.err_inf = 0;
      for (int i = 0; i < n; ++i)
        r.err_inf = std::max(r.err_inf, std::abs(r.alpha_star[i] - alpha[i]));
      return r;
    }
  }
  throw std::logic_error("dirichlet_classic: no admissible q found");
}

ApproximationResult dirichlet_rescaled(const RVec& alpha, double Q, Pivot pivot) {
  int n = static_cast<int>(alpha.size());
  if (n < 2) throw std::invalid_argument("dirichlet_rescaled: needs n >= 2, use the classic variant");
  if (!(Q > 1)) throw std::invalid_argument("dirichlet_rescaled: Q must exceed 1");
  int j = 0;
  if (pivot == Pivot::FirstMax) {
    for (int i = 1; i < n; ++i)
      if (std::abs(alpha[i]) > std::abs(alpha[j])) j = i;
  }
  double scale = std::abs(alpha[j]);
  if (scale == 0) throw std::invalid_argument("dirichlet_rescaled: pivot component is zero");

  RVec rest;
  rest.reserve(n - 1);
  for (int i = 0; i < n; ++i)
    if (i != j) rest.push_back(alpha[i] / scale);
  ApproximationResult c = dirichlet_classic(rest, Q);

  ApproximationResult r;
  r.q = c.q;
  r.pivot = j;
  r.t_bar = c.q / scale;
  r.p.resize(n);
  for (int i = 0, m = 0; i < n; ++i) r.p[i] = (i == j) ? (alpha[j] > 0 ? c.q : -c.q) : c.p[m++];
  r.alpha_star.resize(n);
  r.err_inf = 0;
  for (int i = 0; i < n; ++i) {
    r.alpha_star[i] = (i == j) ? alpha[j] : r.p[i] / r.t_bar;
    r.err_inf = std::max(r.err_inf, std::abs(r.alpha_star[i] - alpha[i]));
  }
  return r;
}

double rescaled_bound(const ApproximationResult& r, double Q) {
  int n = static_cast<int>(r.p.size());
  return 1.0 / (r.t_bar * std::pow(Q, 1.0 / (n - 1)));
}

FrequencyVector to_frequency_vector(const ApproximationResult& r) {
  long g = 0;
  for (long v : r.p) g = std::gcd(g, std::abs(v));
  if (g == 0) throw std::invalid_argument("to_frequency_vector: zero frequency");
  IVec p(r.p.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<int>(r.p[i] / g);
  return FrequencyVector(p, r.t_bar / g);
}

PeriodicAction locate_periodic_action(const Polynomial& h0, const ConvexityConstants& cc,
                                      const RVec& I, double Q, Pivot pivot) {
  int n = h0.dim();
  if (static_cast<int>(I.size()) != n) throw std::invalid_argument("locate_periodic_action: dimension");
  double qroot = std::pow(Q, 1.0 / (n - 1));
  if (cc.grad3_inf > 0 && !(std::sqrt(n - 1.0) / qroot < cc.m_minus * cc.m_minus / (4 * cc.grad3_inf)))
    throw std::invalid_argument("locate_periodic_action: Q too small for the inversion ball");

  RVec omega_I = h0.gradient(I);
  ApproximationResult approx = dirichlet_rescaled(omega_I, Q, pivot);

  Eigen::VectorXd target = Eigen::Map<const Eigen::VectorXd>(approx.alpha_star.data(), n);
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(I.data(), n);
  int it = 0;
  bool converged = false;
  for (; it < 50; ++it) {
    RVec xv(x.data(), x.data() + n);
    RVec g = h0.gradient(xv);
    Eigen::VectorXd res = Eigen::Map<Eigen::VectorXd>(g.data(), n) - target;
    if (res.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, target.lpNorm<Eigen::Infinity>())) {
      converged = true;
      break;
    }
    x -= h0.hessian(xv).ldlt().solve(res);
  }
  if (!converged) throw std::runtime_error("locate_periodic_action: Newton did not converge");

  PeriodicAction out{RVec(x.data(), x.data() + n), to_frequency_vector(approx), approx, 0, 0, it};
  out.distance = (x - Eigen::Map<const Eigen::VectorXd>(I.data(), n)).norm();
  out.bound = std::sqrt(n - 1.0) / (cc.m_minus * approx.t_bar * qroot);

  // M₋|I-I*|₂ ≤ |ω(I)-ω(I*)|₂ ≤ √(n-1)|ω(I)-ω(I*)|∞
  double d2 = 0, dinf = 0;
  for (int i = 0; i < n; ++i) {
    double d = omega_I[i] - approx.alpha_star[i];
    d2 += d * d;
    dinf = std::max(dinf, std::abs(d));
  }
  d2 = std::sqrt(d2);
  double slack = 1e-10;
  if (cc.m_minus * out.distance > d2 + slack || d2 > std::sqrt(n - 1.0) * dinf + slack ||
      out.distance > out.bound + slack)
    throw std::runtime_error("locate_periodic_action: certification failed");
  return out;
}

}  // namespace nekh
