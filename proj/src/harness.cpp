#include "nekh/harness.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <tbb/parallel_for.h>

namespace nekh {

namespace {

constexpr int kMaxSlow = 16;

// P, ∇P, ∇²P of Π s_i^{e_i}; d ≤ kMaxSlow
struct MonoDerivs {
  double v;
  std::array<double, kMaxSlow> g;
  std::array<std::array<double, kMaxSlow>, kMaxSlow> h;
};

double ipow(double x, int e) {
  double r = 1;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

// ∂ of x^e, `order` times
double dpow(double x, int e, int order) {
  if (order > e) return 0;
  double c = 1;
  for (int i = 0; i < order; ++i) c *= (e - i);
  return c * ipow(x, e - order);
}

void monomial(const std::vector<int>& e, const double* s, int d, bool second, MonoDerivs& out) {
  std::array<double, kMaxSlow> p0, p1, p2;
  for (int i = 0; i < d; ++i) {
    int ei = i < static_cast<int>(e.size()) ? e[i] : 0;
    p0[i] = dpow(s[i], ei, 0);
    p1[i] = dpow(s[i], ei, 1);
    p2[i] = dpow(s[i], ei, 2);
  }
  out.v = 1;
  for (int i = 0; i < d; ++i) out.v *= p0[i];
  for (int i = 0; i < d; ++i) {
    double g = p1[i];
    for (int j = 0; j < d; ++j)
      if (j != i) g *= p0[j];
    out.g[i] = g;
  }
  if (!second) return;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      double h = i == j ? p2[i] : p1[i] * p1[j];
      for (int l = 0; l < d; ++l)
        if (l != i && l != j) h *= p0[l];
      out.h[i][j] = out.h[j][i] = h;
    }
}

bool all_zero(const std::vector<int>& e) {
  return std::all_of(e.begin(), e.end(), [](int v) { return v == 0; });
}

}  // namespace

// ------------------------------------------------------------------ perturbation

TrigPerturbation::TrigPerturbation(int n, int m, std::vector<TrigTerm> terms)
    : n_(n), m_(m), terms_(std::move(terms)) {
  if (n + 2 * m > kMaxSlow) throw std::invalid_argument("TrigPerturbation: too many slow variables");
  for (auto& t : terms_) {
    if (static_cast<int>(t.k.size()) != n) throw std::invalid_argument("TrigPerturbation: mode dimension");
    if (!t.slow_exp.empty() && static_cast<int>(t.slow_exp.size()) != n + 2 * m)
      throw std::invalid_argument("TrigPerturbation: exponent vector must have n + 2m entries");
    for (int e : t.slow_exp)
      if (e < 0) throw std::invalid_argument("TrigPerturbation: negative exponent");
    if (all_zero(t.slow_exp)) t.slow_exp.clear();
  }
}

int TrigPerturbation::max_mode_norm() const {
  int r = 0;
  for (const auto& t : terms_) r = std::max(r, l1_norm(t.k));
  return r;
}

namespace {
// slow index → z index for z = (I, θ, x, y)
inline int slow_to_z(int i, int n) { return i < n ? i : n + i; }
}  // namespace

double TrigPerturbation::value(const double* z) const {
  const int d = n_ + 2 * m_;
  std::array<double, kMaxSlow> s;
  for (int i = 0; i < d; ++i) s[i] = z[slow_to_z(i, n_)];
  double v = 0;
  MonoDerivs md;
  for (const auto& t : terms_) {
    double phase = 0;
    for (int j = 0; j < n_; ++j) phase += t.k[j] * z[n_ + j];
    cplx c = t.amp * cplx(std::cos(phase), std::sin(phase));
    double P = 1;
    if (!t.slow_exp.empty()) {
      monomial(t.slow_exp, s.data(), d, false, md);
      P = md.v;
    }
    v += c.real() * P;
  }
  return v;
}

void TrigPerturbation::accumulate(const double* z, double scale, Eigen::Ref<Eigen::VectorXd> g,
                                  Eigen::Ref<Eigen::MatrixXd> h) const {
  const int d = n_ + 2 * m_;
  std::array<double, kMaxSlow> s;
  for (int i = 0; i < d; ++i) s[i] = z[slow_to_z(i, n_)];
  MonoDerivs md;
  for (const auto& t : terms_) {
    double phase = 0;
    for (int j = 0; j < n_; ++j) phase += t.k[j] * z[n_ + j];
    cplx c = scale * t.amp * cplx(std::cos(phase), std::sin(phase));
    const double cr = c.real(), ci = c.imag();
    const bool poly = !t.slow_exp.empty();
    double P = 1;
    if (poly) {
      monomial(t.slow_exp, s.data(), d, true, md);
      P = md.v;
    }
    for (int a = 0; a < n_; ++a) {
      if (t.k[a] == 0) continue;
      g[n_ + a] += -t.k[a] * ci * P;
      for (int b = 0; b < n_; ++b) h(n_ + a, n_ + b) += -t.k[a] * t.k[b] * cr * P;
    }
    if (!poly) continue;
    for (int i = 0; i < d; ++i) {
      int zi = slow_to_z(i, n_);
      g[zi] += cr * md.g[i];
      for (int a = 0; a < n_; ++a) {
        double v = -t.k[a] * ci * md.g[i];
        h(zi, n_ + a) += v;
        h(n_ + a, zi) += v;
      }
      for (int j = 0; j < d; ++j) h(zi, slow_to_z(j, n_)) += cr * md.h[i][j];
    }
  }
}

FourierField TrigPerturbation::sample(const SlowGrid& grid, const RVec& origin, int truncation) const {
  const int d = n_ + 2 * m_;
  if (grid.dim() != d) throw std::invalid_argument("TrigPerturbation::sample: grid must have n + 2m axes");
  if (max_mode_norm() > truncation)
    throw std::invalid_argument("TrigPerturbation::sample: mode beyond truncation radius");
  FourierField f(n_, grid, truncation);
  MonoDerivs md;
  for (const auto& t : terms_) {
    IVec neg(t.k);
    for (int& v : neg) v = -v;
    Coef& cp = f.modes.try_emplace(t.k, Coef(grid.size(), cplx(0, 0))).first->second;
    Coef& cm = f.modes.try_emplace(neg, Coef(grid.size(), cplx(0, 0))).first->second;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      RVec p = grid.point(g);
      for (int j = 0; j < n_ && j < static_cast<int>(origin.size()); ++j) p[j] += origin[j];
      double P = 1;
      if (!t.slow_exp.empty()) {
        monomial(t.slow_exp, p.data(), d, false, md);
        P = md.v;
      }
      // Re(a e^{ikθ}) = ½ a e^{ikθ} + ½ ā e^{-ikθ}
      cp[g] += 0.5 * t.amp * P;
      cm[g] += 0.5 * std::conj(t.amp) * P;
    }
  }
  for (auto it = f.modes.begin(); it != f.modes.end();) {
    bool zero = std::all_of(it->second.begin(), it->second.end(),
                            [](const cplx& v) { return v == cplx(0, 0); });
    it = zero ? f.modes.erase(it) : std::next(it);
  }
  return f;
}

void ScenarioConfig::validate() const {
  spec.validate();
  if (!(eps >= 0)) throw std::invalid_argument("scenario: eps must be >= 0");
  if (!(dt > 0)) throw std::invalid_argument("scenario: dt must be positive");
  if (!(horizon >= 0)) throw std::invalid_argument("scenario: horizon must be >= 0");
  if (max_steps < 0) throw std::invalid_argument("scenario: max_steps must be >= 0");
  if (h1.n() != spec.n || h1.m() != spec.m)
    throw std::invalid_argument("scenario: perturbation dimensions differ from the system");
  for (std::size_t i = 0; i < initial.size(); ++i) {
    const auto& ic = initial[i];
    if (static_cast<int>(ic.I.size()) != spec.n || static_cast<int>(ic.theta.size()) != spec.n ||
        static_cast<int>(ic.x.size()) != spec.m || static_cast<int>(ic.y.size()) != spec.m)
      throw std::invalid_argument("scenario: initial condition " + std::to_string(i) + " has wrong shape");
    for (int j = 0; j < spec.n; ++j)
      if (ic.I[j] < spec.action_lo[j] || ic.I[j] > spec.action_hi[j])
        throw std::invalid_argument("scenario: initial condition " + std::to_string(i) +
                                    " outside the action domain");
  }
  if (slow_points < 5) throw std::invalid_argument("scenario: slow_points must be >= 5");
}

// ------------------------------------------------------------------ dynamics

Dynamics::Dynamics(const Polynomial& h0, const TrigPerturbation& h1, double eps)
    : h0_(&h0), h1_(&h1), eps_(eps), n_(h0.dim()), m_(h1.m()), N_(2 * h0.dim() + 2 * h1.m()) {
  if (h1.n() != n_) throw std::invalid_argument("Dynamics: H0 and H1 dimensions differ");
  g_.resize(N_);
  h_.resize(N_, N_);
}

double Dynamics::energy(const Eigen::VectorXd& z) const {
  RVec I(z.data(), z.data() + n_);
  return h0_->value(I) + eps_ * h1_->value(z.data());
}

void Dynamics::gradient_hessian(const Eigen::VectorXd& z) const {
  g_.setZero();
  h_.setZero();
  // H0 through its term list: no allocation per call
  std::array<double, kMaxSlow> x;
  const RVec& sh = h0_->shift();
  for (int i = 0; i < n_; ++i) x[i] = z[i] + (sh.empty() ? 0.0 : sh[i]);
  MonoDerivs md;
  for (const auto& t : h0_->terms()) {
    monomial(t.e, x.data(), n_, true, md);
    for (int i = 0; i < n_; ++i) {
      g_[i] += t.c * md.g[i];
      for (int j = 0; j < n_; ++j) h_(i, j) += t.c * md.h[i][j];
    }
  }
  if (eps_ != 0) h1_->accumulate(z.data(), eps_, g_, h_);
}

Eigen::MatrixXd Dynamics::omega_form() const {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(N_, N_);
  for (int j = 0; j < n_; ++j) {
    W(j, n_ + j) = -1;
    W(n_ + j, j) = 1;
  }
  for (int j = 0; j < m_; ++j) {
    int xi = 2 * n_ + j, yi = 2 * n_ + m_ + j;
    W(xi, yi) = -1;
    W(yi, xi) = 1;
  }
  return W;
}

void Dynamics::field_jacobian(const Eigen::VectorXd& z, Eigen::VectorXd& f, Eigen::MatrixXd& df) const {
  gradient_hessian(z);
  f.resize(N_);
  df.resize(N_, N_);
  // İ = -H_θ, θ̇ = H_I, ẋ = -H_y, ẏ = H_x
  for (int j = 0; j < n_; ++j) {
    f[j] = -g_[n_ + j];
    f[n_ + j] = g_[j];
    df.row(j) = -h_.row(n_ + j);
    df.row(n_ + j) = h_.row(j);
  }
  for (int j = 0; j < m_; ++j) {
    int xi = 2 * n_ + j, yi = 2 * n_ + m_ + j;
    f[xi] = -g_[yi];
    f[yi] = g_[xi];
    df.row(xi) = -h_.row(yi);
    df.row(yi) = h_.row(xi);
  }
}

Eigen::VectorXd Dynamics::field(const Eigen::VectorXd& z) const {
  Eigen::VectorXd f;
  Eigen::MatrixXd df;
  field_jacobian(z, f, df);
  return f;
}

int midpoint_step(const Dynamics& dyn, Eigen::VectorXd& z, double h) {
  const int N = dyn.dim();
  thread_local Eigen::VectorXd f, z1, mid, r;
  thread_local Eigen::MatrixXd df, jac;
  thread_local Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  dyn.field_jacobian(z, f, df);
  z1 = z + h * f;
  for (int it = 1; it <= 30; ++it) {
    mid = 0.5 * (z + z1);
    dyn.field_jacobian(mid, f, df);
    r = z1 - z - h * f;
    jac = Eigen::MatrixXd::Identity(N, N) - 0.5 * h * df;
    lu.compute(jac);
    Eigen::VectorXd delta = lu.solve(r);
    z1 -= delta;
    bool done = true;
    for (int i = 0; i < N; ++i)
      if (std::abs(delta[i]) > 1e-12 * std::max(1.0, std::abs(z1[i]))) done = false;
    if (!std::isfinite(z1.squaredNorm())) break;
    if (done) {
      z = z1;
      return it;
    }
  }
  throw std::runtime_error("midpoint_step: Newton failed to reach 1e-12");
}

Eigen::MatrixXd midpoint_jacobian(const Dynamics& dyn, const Eigen::VectorXd& z, double h) {
  Eigen::VectorXd z1 = z;
  midpoint_step(dyn, z1, h);
  Eigen::VectorXd f;
  Eigen::MatrixXd A;
  dyn.field_jacobian(0.5 * (z + z1), f, A);
  const int N = dyn.dim();
  Eigen::MatrixXd Id = Eigen::MatrixXd::Identity(N, N);
  return (Id - 0.5 * h * A).lu().solve(Id + 0.5 * h * A);
}

// ------------------------------------------------------------------ runs

RunReport integrate_trajectory(const ScenarioConfig& cfg, const InitialCondition& ic,
                               double predicted_confinement, double time_log) {
  const int n = cfg.spec.n, m = cfg.spec.m;
  Dynamics dyn(cfg.spec.h0, cfg.h1, cfg.eps);
  Eigen::VectorXd z(dyn.dim());
  for (int j = 0; j < n; ++j) {
    z[j] = ic.I[j];
    z[n + j] = ic.theta[j];
  }
  for (int j = 0; j < m; ++j) {
    z[2 * n + j] = ic.x[j];
    z[2 * n + m + j] = ic.y[j];
  }
  RunReport rep;
  rep.predicted_confinement = predicted_confinement;
  long steps = static_cast<long>(std::llround(cfg.horizon / cfg.dt));
  steps = std::min(steps, cfg.max_steps);
  long every = cfg.output_every > 0 ? cfg.output_every : std::max(1L, steps / 1000);
  const double e0 = dyn.energy(z);
  const double escale = std::abs(e0) > 0 ? std::abs(e0) : 1.0;
  const double xy_limit = cfg.xy_half_width + cfg.spec.sigma;
  const Eigen::VectorXd I0 = z.head(n);

  auto sample = [&](long s) {
    StepSample row{s, s * cfg.dt, (z.head(n) - I0).norm(), dyn.energy(z), 0.0};
    if (m > 0) row.xy_radius = z.tail(2 * m).lpNorm<Eigen::Infinity>();
    rep.samples.push_back(row);
  };
  sample(0);
  for (long s = 1; s <= steps; ++s) {
    int it;
    try {
      it = midpoint_step(dyn, z, cfg.dt);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(e.what()) + " at step " + std::to_string(s));
    }
    rep.max_newton = std::max(rep.max_newton, it);
    rep.max_action_drift = std::max(rep.max_action_drift, (z.head(n) - I0).norm());
    rep.energy_drift = std::max(rep.energy_drift, std::abs(dyn.energy(z) - e0) / escale);
    if (m > 0 && z.tail(2 * m).lpNorm<Eigen::Infinity>() > xy_limit) rep.xy_exited = true;
    if (s % every == 0 || s == steps) sample(s);
  }
  rep.steps = steps;
  rep.t_end = steps * cfg.dt;
  rep.covered_log10 = rep.t_end > 0 ? std::log10(rep.t_end) - time_log / std::log(10.0)
                                    : -std::numeric_limits<double>::infinity();
  rep.bound_held = rep.max_action_drift <= rep.predicted_confinement;
  return rep;
}

std::vector<RunReport> integrate(const ScenarioConfig& cfg, double predicted_confinement,
                                 double time_log) {
  cfg.validate();
  std::vector<RunReport> out(cfg.initial.size());
  tbb::parallel_for(std::size_t(0), cfg.initial.size(), [&](std::size_t i) {
    out[i] = integrate_trajectory(cfg, cfg.initial[i], predicted_confinement, time_log);
  });
  return out;
}

double perturbation_mu(const ScenarioConfig& cfg) {
  return fourier_norm_with_gradient(cfg.spec.perturbation, cfg.spec.rho);
}

namespace {

struct ConstantsStage {
  std::optional<PeriodicAction> periodic;
  double mu = 0;
  double R = 0;
  StabilityReport report;
};

// Dirichlet and constants; ℛ uses the located T̄ in both regimes.
ConstantsStage prepare_constants(const ScenarioConfig& cfg, bool require_feasible) {
  const int n = cfg.spec.n;
  const auto& cc = cfg.spec.convexity;
  ConstantsStage out;
  double Q = cfg.Q > 0 ? cfg.Q : std::pow(cfg.eps, -(n - 1.0) / (2 * n));
  try {
    out.periodic = locate_periodic_action(cfg.spec.h0, cc, cfg.initial.at(0).I, Q, cfg.pivot);
  } catch (const std::exception& e) {
    throw StageError("dirichlet", "", e.what());
  }
  const PeriodicAction& pa = *out.periodic;
  double mu_spec = perturbation_mu(cfg);

  SplitEvaluator eval;
  double R;
  if (cfg.regime == Regime::global) {
    // ℛT̄ depends on ε only
    double RT_bar = 8 * std::sqrt(n - 1.0) * cc.m_plus * std::pow(cfg.eps, 1.0 / (2 * n)) /
                    (cc.m_minus * cc.m_minus);
    R = RT_bar / pa.omega.t_bar();
  } else {
    if (!(cfg.local_r > 0)) throw StageError("constants", "", "local regime needs r > 0");
    for (std::size_t i = 0; i < cfg.initial.size(); ++i) {
      double d = 0;
      for (int j = 0; j < n; ++j) d += std::pow(cfg.initial[i].I[j] - pa.I_star[j], 2);
      if (std::sqrt(d) > cfg.local_r)
        throw StageError("constants", "initial_radius",
                         "initial condition " + std::to_string(i) + " farther than r from I*");
    }
    R = 8 * cfg.local_r * cc.m_plus / cc.m_minus;
  }
  SlowGrid grid = averaging_grid(n, cfg.spec.m, R, cfg.slow_points);
  FourierField local = cfg.h1.sample(grid, pa.I_star, std::max(cfg.h1.max_mode_norm(), 0));
  out.mu = std::max(mu_spec, fourier_norm_with_gradient(local, cfg.spec.rho));
  out.R = R;

  SystemConstants sys = system_constants(cfg.spec, out.mu);
  if (cfg.regime == Regime::global) {
    eval = [&](const RhoSplit& s) { return global_constants(sys, cfg.eps, s); };
  } else {
    RVec w = pa.omega.omega();
    double wn = 0;
    for (double v : w) wn += v * v;
    LocalInputs li{cfg.local_r, pa.omega.t_bar(), std::sqrt(wn)};
    eval = [sys, eps = cfg.eps, li](const RhoSplit& s) { return local_constants(sys, eps, li, s); };
  }
  if (cfg.rho_split) {
    out.report = eval(*cfg.rho_split);
    if (require_feasible && !out.report.feasible()) {
      const ConstraintRow* v = out.report.first_violation();
      throw StageError("constants", v->name, "configured rho split violates " + v->name);
    }
    return out;
  }
  OptimizeResult opt = optimize_rho_split(eval, cfg.spec.rho);
  if (require_feasible && !opt.feasible)
    throw StageError("constants", opt.binding, "no feasible rho split; binding constraint " + opt.binding);
  out.report = opt.report;
  return out;
}

}  // namespace

std::vector<RunReport> integrate(const ScenarioConfig& cfg) {
  if (cfg.eps == 0) return integrate(cfg, 0.0, std::numeric_limits<double>::infinity());
  ConstantsStage cs = prepare_constants(cfg, false);
  return integrate(cfg, cs.report.confinement, cs.report.time_log);
}

SlowGrid averaging_grid(int n, int m, double R, int points) {
  RVec lo, hi;
  std::vector<int> pts;
  double hI = R / std::sqrt(double(n));
  for (int j = 0; j < n; ++j) {
    lo.push_back(-hI);
    hi.push_back(hI);
    pts.push_back(points);
  }
  double hxy = m > 0 ? R / std::sqrt(double(m)) : 0;
  for (int j = 0; j < 2 * m; ++j) {
    lo.push_back(-hxy);
    hi.push_back(hxy);
    pts.push_back(points);
  }
  return SlowGrid(lo, hi, pts);
}

PipelineReport run_pipeline(const ScenarioConfig& cfg, const PipelineOptions& opt) {
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw StageError("config", "", e.what());
  }
  if (cfg.initial.empty()) throw StageError("config", "", "no initial conditions");
  PipelineReport out;
  const int n = cfg.spec.n, m = cfg.spec.m;

  if (cfg.eps == 0) {
    out.notes.push_back("eps = 0: dirichlet, constants and averaging skipped; confinement 0");
    if (opt.run_integration) out.runs = integrate(cfg, 0.0, std::numeric_limits<double>::infinity());
    for (const auto& r : out.runs) out.drift_ok = out.drift_ok && r.bound_held;
    return out;
  }

  ConstantsStage cs = prepare_constants(cfg, true);
  out.periodic = cs.periodic;
  out.mu = cs.mu;
  out.R = cs.R;
  out.constants = cs.report;
  const PeriodicAction& pa = *out.periodic;
  const auto& cc = cfg.spec.convexity;
  const RhoSplit& sp = out.constants.rho_split;
  SlowGrid grid = averaging_grid(n, m, out.R, cfg.slow_points);

  // averaging
  try {
    PartitionParams params =
        PartitionParams::from_split(sp.rho1, sp.rho2, sp.rho3, cc.m_plus, out.R, pa.omega.t_bar());
    int trunc = cfg.truncation > 0 ? cfg.truncation : static_cast<int>(std::ceil(params.K)) + n;
    trunc = std::max(trunc, cfg.h1.max_mode_norm());
    FourierField field = cfg.h1.sample(grid, pa.I_star, trunc);
    HamiltonianSpec local_spec = cfg.spec;
    local_spec.h0 = cfg.spec.h0.shifted(pa.I_star);
    GPart g = taylor_split(local_spec, pa.omega, out.R);
    AveragingState st = make_state(field, params, pa.omega, g);
    AveragingConfig ac;
    ac.eps = cfg.eps;
    ac.mu = out.mu;
    ac.sigma = cfg.spec.sigma;
    ac.m = m;
    ac.m_plus = cc.m_plus;
    ac.outputs = cfg.averaging_outputs;
    out.averaging = run_averaging(st, ac);
  } catch (const ConstraintViolation& e) {
    throw StageError("averaging", e.bullet(), e.what());
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("averaging", "", e.what());
  }
  out.nonres_ok = out.averaging->nonres_ok;
  out.deviation_ok = out.averaging->deviation_ok;
  out.envelope_ok = out.averaging->envelope_ok;

  // integration
  if (opt.run_integration) {
    try {
      out.runs = integrate(cfg, out.constants.confinement, out.constants.time_log);
    } catch (const std::exception& e) {
      throw StageError("integrate", "", e.what());
    }
    for (auto& r : out.runs) {
      out.drift_ok = out.drift_ok && r.bound_held;
      if (r.xy_exited) out.notes.push_back("trajectory left the (x, y) domain; flagged, not truncated");
      if (!opt.keep_samples) r.samples.clear();
    }
  }
  return out;
}

// ------------------------------------------------------------------ output

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  auto line = [&f](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) f << (i ? "," : "") << cells[i];
    f << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

namespace {
std::string ivec_str(const IVec& k) {
  std::string s;
  for (std::size_t i = 0; i < k.size(); ++i) s += (i ? " " : "") + std::to_string(k[i]);
  return s;
}
}  // namespace

void write_run_csv(const std::string& path, const RunReport& r) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : r.samples)
    rows.push_back({std::to_string(s.step), fmt17(s.t), fmt17(s.action_drift), fmt17(s.energy),
                    fmt17(s.xy_radius)});
  write_csv(path, {"step", "t", "action_drift", "energy", "xy_radius"}, rows);
}

void write_decay_csv(const std::string& path, const std::vector<DecayRow>& rows) {
  std::vector<std::vector<std::string>> out;
  for (const auto& d : rows)
    out.push_back({fmt17(d.delta), ivec_str(d.k), fmt17(d.abs_coeff), fmt17(d.envelope)});
  write_csv(path, {"delta", "k", "abs_coeff", "envelope"}, out);
}

void write_constraints_csv(const std::string& path, const StabilityReport& rep) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : rep.constraints)
    rows.push_back({c.name, fmt17(c.lhs), fmt17(c.rhs), c.strict ? "<" : "<=",
                    c.satisfied ? "1" : "0", c.note});
  write_csv(path, {"constraint", "lhs", "rhs", "relation", "satisfied", "note"}, rows);
}

std::string summarize(const PipelineReport& rep) {
  std::ostringstream s;
  auto flag = [](bool b) { return b ? "PASS" : "FAIL"; };
  s << "mu                     " << fmt17(rep.mu) << "\n";
  if (rep.periodic) {
    s << "T_bar                  " << fmt17(rep.periodic->omega.t_bar()) << "\n";
    s << "|I - I*|               " << fmt17(rep.periodic->distance) << " (bound "
      << fmt17(rep.periodic->bound) << ")\n";
    s << "R (confinement radius) " << fmt17(rep.R) << "\n";
  }
  if (!rep.constants.constraints.empty()) {
    const auto& c = rep.constants;
    s << "rho split              " << fmt17(c.rho_split.rho1) << " " << fmt17(c.rho_split.rho2) << " "
      << fmt17(c.rho_split.rho3) << "\n";
    s << "K                      " << fmt17(c.K) << "\n";
    s << "confinement            " << fmt17(c.confinement) << "\n";
    s << "ln T                   " << fmt17(c.time_log) << "\n";
  }
  if (rep.averaging) {
    const auto& a = *rep.averaging;
    s << "delta*                 " << fmt17(a.delta_star) << "\n";
    s << "nonresonant norm       " << fmt17(a.nonres_norm) << " <= " << fmt17(a.nonres_bound) << "  "
      << flag(rep.nonres_ok) << "\n";
    s << "deviation              " << fmt17(std::max(a.deviation_inf, a.deviation_angle_inf)) << " <= "
      << fmt17(a.deviation_bound) << "  " << flag(rep.deviation_ok) << "\n";
    s << "envelope worst ratio   " << fmt17(a.envelope_worst) << "  " << flag(rep.envelope_ok) << "\n";
    s << "truncation leak        " << fmt17(a.leaked_mass) << "\n";
  }
  for (std::size_t i = 0; i < rep.runs.size(); ++i) {
    const auto& r = rep.runs[i];
    s << "run " << i << ": drift " << fmt17(r.max_action_drift) << " <= " << fmt17(r.predicted_confinement)
      << "  " << flag(r.bound_held) << ", energy drift " << fmt17(r.energy_drift) << ", steps " << r.steps
      << ", log10 fraction of T covered " << fmt17(r.covered_log10) << "\n";
  }
  for (const auto& note : rep.notes) s << "note: " << note << "\n";
  s << "overall                " << flag(rep.all_pass()) << "\n";
  return s.str();
}

void write_pipeline_bundle(const std::string& dir, const PipelineReport& rep) {
  std::filesystem::create_directories(dir);
  if (!rep.constants.constraints.empty()) write_constraints_csv(dir + "/constraints.csv", rep.constants);
  if (rep.averaging) write_decay_csv(dir + "/decay.csv", rep.averaging->decay);
  for (std::size_t i = 0; i < rep.runs.size(); ++i)
    write_run_csv(dir + "/run_" + std::to_string(i) + ".csv", rep.runs[i]);
  std::ofstream(dir + "/summary.txt") << summarize(rep);
}

}  // namespace nekh
