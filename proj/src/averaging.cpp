#include "nekh/averaging.hpp"

#include <algorithm>
#include <cmath>

#include <boost/numeric/odeint.hpp>
#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include "nekh/majorant.hpp"
#include "nekh/sums.hpp"

namespace nekh {

namespace odeint = boost::numeric::odeint;
using state_t = std::vector<double>;

AveragingState make_state(const FourierField& h1, const PartitionParams& params,
                          const FrequencyVector& omega, const GPart& g) {
  AveragingState s;
  s.delta = 0;
  s.field = h1;
  s.params = params;
  s.omega = omega;
  s.g_part = g;
  s.transform_log = FourierField(h1.n, h1.grid, h1.truncation_radius);
  return s;
}

Coef apply_g(const Coef& coeff, const IVec& k, double t, const SlowGrid& grid, const GPart& g,
             double exponent_cap) {
  if (coeff.size() != grid.size()) throw std::invalid_argument("apply_g: coefficient size");
  Coef out(coeff);
  int n = static_cast<int>(k.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    RVec p = grid.point(i);
    RVec I(p.begin(), p.begin() + n);
    RVec dg = g.grad(I);
    double s = 0;
    for (int j = 0; j < n; ++j) s += k[j] * dg[j];
    double e = -t * s;
    if (std::abs(e) > exponent_cap)
      throw std::overflow_error("apply_g: exponent exceeds cap (rho1 budget exceeded)");
    out[i] *= std::exp(e);
  }
  return out;
}

namespace {

// Fourier modes |k|₁ ≤ truncation on a dense index plus the per-interval pair tables.
class Engine {
 public:
  Engine(const AveragingState& st, const AveragingConfig& cfg)
      : cfg_(cfg),
        params_(st.params),
        omega_(st.omega),
        grid_(st.field.grid),
        n_(st.field.n),
        m_(cfg.m),
        trunc_(st.field.truncation_radius),
        box_(st.field.n, std::max(st.field.truncation_radius, 0)) {
    if (grid_.dim() != n_ + 2 * m_)
      throw std::invalid_argument("averaging: grid must have n + 2m axes");
    if (trunc_ < params_.K) throw std::invalid_argument("averaging: truncation radius below K");
    G_ = grid_.size();
    box_to_mode_.assign(box_.size(), -1);
    for (const IVec& k : enumerate_diamond(trunc_, n_, kDefaultEnumerationCap)) {
      box_to_mode_[box_.index(k)] = static_cast<int>(modes_.size());
      modes_.push_back(k);
      norms_.push_back(l1_norm(k));
    }
    M_ = modes_.size();
    grad_g_.resize(G_);
    Y_.resize(G_);
    for (std::size_t g = 0; g < G_; ++g) {
      RVec p = grid_.point(g);
      RVec I(p.begin(), p.begin() + n_);
      grad_g_[g] = st.g_part.grad(I);
      double y = 0;
      for (double v : p) y += std::abs(v);
      Y_[g] = y;
    }
    sigma_.assign(M_, 0);
  }

  std::size_t modes() const { return M_; }
  std::size_t grid_size() const { return G_; }
  const IVec& mode(std::size_t i) const { return modes_[i]; }
  int index_of(const IVec& k) const {
    if (!box_.contains(k) || l1_norm(k) > trunc_) return -1;
    return box_to_mode_[box_.index(k)];
  }
  std::size_t state_size() const { return 4 * M_ * G_ + 1; }

  void pack(const FourierField& h, const FourierField& j, state_t& x) const {
    x.assign(state_size(), 0.0);
    auto* H = reinterpret_cast<cplx*>(x.data());
    auto* J = H + M_ * G_;
    for (const auto& [k, c] : h.modes) {
      int i = index_of(k);
      if (i < 0) throw std::invalid_argument("averaging: initial mode beyond truncation");
      std::copy(c.begin(), c.end(), H + i * G_);
    }
    for (const auto& [k, c] : j.modes) {
      int i = index_of(k);
      if (i >= 0) std::copy(c.begin(), c.end(), J + i * G_);
    }
  }

  FourierField unpack(const state_t& x, bool transform_part) const {
    FourierField f(n_, grid_, trunc_);
    const auto* H = reinterpret_cast<const cplx*>(x.data()) + (transform_part ? M_ * G_ : 0);
    for (std::size_t i = 0; i < M_; ++i) {
      const cplx* c = H + i * G_;
      if (std::all_of(c, c + G_, [](const cplx& v) { return v == cplx(0, 0); })) continue;
      f.modes[modes_[i]] = Coef(c, c + G_);
    }
    return f;
  }

  // σ_k and the pair tables for a fixed classification time
  bool set_interval(double delta) {
    std::vector<int> sig(M_);
    for (std::size_t i = 0; i < M_; ++i) sig[i] = sigma_k(modes_[i], delta, params_, omega_);
    if (sig == sigma_ && !pairs_.empty()) return false;
    sigma_ = sig;
    lpm_.clear();
    for (std::size_t i = 0; i < M_; ++i)
      if (sigma_[i] != 0) lpm_.push_back(i);
    pairs_.assign(M_, {});
    leak_pairs_.clear();
    IVec sum(n_);
    for (std::size_t l = 0; l < M_; ++l) {
      if (norms_[l] == 0) continue;  // l ≠ 0
      for (std::size_t p : lpm_) {
        for (int j = 0; j < n_; ++j) sum[j] = modes_[p][j] + modes_[l][j];
        int k = index_of(sum);
        if (k < 0)
          leak_pairs_.push_back({p, l});
        else
          pairs_[k].push_back({p, l});
      }
    }
    lin_.assign(M_ * G_, 0.0);
    for (std::size_t i = 0; i < M_; ++i) {
      if (sigma_[i] == 0) continue;
      double w = std::abs(omega_.dot(modes_[i]));
      for (std::size_t g = 0; g < G_; ++g) {
        double kg = 0;
        for (int j = 0; j < n_; ++j) kg += modes_[i][j] * grad_g_[g][j];
        lin_[i * G_ + g] = -w - sigma_[i] * kg;
      }
    }
    return true;
  }

  void rhs(const state_t& x, state_t& dxdt, double /*delta*/) {
    ++evals_;
    dxdt.assign(x.size(), 0.0);
    const auto* H = reinterpret_cast<const cplx*>(x.data());
    auto* dH = reinterpret_cast<cplx*>(dxdt.data());
    auto* dJ = dH + M_ * G_;

    const bool conv = cfg_.convolutions && cfg_.eps != 0;
    if (conv) prepare_derivatives(H);

    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, M_), [&](const auto& r) {
      std::vector<cplx> acc(G_);
      for (std::size_t k = r.begin(); k != r.end(); ++k) {
        std::fill(acc.begin(), acc.end(), cplx(0, 0));
        if (conv) {
          for (const auto& pr : pairs_[k]) {
            if (!active_[pr.p] || !active_[pr.l]) continue;
            add_bracket(H, pr.p, pr.l, cplx(0, cfg_.eps * sigma_[pr.p]), acc.data());
          }
        }
        const cplx* h = H + k * G_;
        for (std::size_t g = 0; g < G_; ++g) {
          dH[k * G_ + g] = acc[g] + lin_[k * G_ + g] * h[g];
          dJ[k * G_ + g] = double(sigma_[k]) * h[g];
        }
      }
    });

    double leak = 0;
    if (conv) {
      std::vector<cplx> acc(G_);
      for (const auto& pr : leak_pairs_) {
        if (!active_[pr.p] || !active_[pr.l]) continue;
        std::fill(acc.begin(), acc.end(), cplx(0, 0));
        add_bracket(H, pr.p, pr.l, cplx(0, cfg_.eps * sigma_[pr.p]), acc.data());
        double s = 0;
        for (const cplx& v : acc) s = std::max(s, std::abs(v));
        leak += s;
      }
    }
    dxdt.back() = leak;
  }

  std::size_t evals() const { return evals_; }
  int sigma_of(std::size_t i) const { return sigma_[i]; }
  int norm_of(std::size_t i) const { return norms_[i]; }
  double Y(std::size_t g) const { return Y_[g]; }

 private:
  struct Pair {
    std::size_t p, l;
  };

  void prepare_derivatives(const cplx* H) {
    active_.assign(M_, 0);
    int axes = n_ + 2 * m_;
    deriv_.assign(M_ * axes, Coef());
    for (std::size_t i = 0; i < M_; ++i) {
      const cplx* c = H + i * G_;
      active_[i] = std::any_of(c, c + G_, [](const cplx& v) { return v != cplx(0, 0); });
    }
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, M_), [&](const auto& r) {
      for (std::size_t i = r.begin(); i != r.end(); ++i) {
        if (!active_[i]) continue;
        Coef c(H + i * G_, H + (i + 1) * G_);
        for (int a = 0; a < axes; ++a) deriv_[i * axes + a] = grid_derivative(grid_, c, a);
      }
    });
  }

  // acc += scale · e^{-i(α+β)θ}{f e^{iαθ}, h e^{iβθ}}
  void add_bracket(const cplx* H, std::size_t p, std::size_t l, cplx scale, cplx* acc) const {
    const int axes = n_ + 2 * m_;
    const cplx* f = H + p * G_;
    const cplx* h = H + l * G_;
    const IVec& a = modes_[p];
    const IVec& b = modes_[l];
    const Coef* df = &deriv_[p * axes];
    const Coef* dh = &deriv_[l * axes];
    const cplx I(0, 1);
    for (std::size_t g = 0; g < G_; ++g) {
      cplx ad = 0, bd = 0;
      for (int j = 0; j < n_; ++j) {
        ad += double(a[j]) * dh[j][g];
        bd += double(b[j]) * df[j][g];
      }
      cplx v = I * f[g] * ad - I * h[g] * bd;
      for (int j = 0; j < m_; ++j) {
        const int xa = n_ + j, ya = n_ + m_ + j;
        v += df[ya][g] * dh[xa][g] - df[xa][g] * dh[ya][g];
      }
      acc[g] += scale * v;
    }
  }

  const AveragingConfig& cfg_;
  PartitionParams params_;
  FrequencyVector omega_;
  SlowGrid grid_;
  int n_, m_, trunc_;
  DenseBox box_;
  std::size_t G_ = 0, M_ = 0;
  std::vector<int> box_to_mode_;
  std::vector<IVec> modes_;
  std::vector<int> norms_;
  std::vector<RVec> grad_g_;
  std::vector<double> Y_;
  std::vector<int> sigma_;
  std::vector<std::size_t> lpm_;
  std::vector<std::vector<Pair>> pairs_;
  std::vector<Pair> leak_pairs_;
  std::vector<double> lin_;
  std::vector<char> active_;
  std::vector<Coef> deriv_;
  std::size_t evals_ = 0;
};

double sup_abs(const cplx* c, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s = std::max(s, std::abs(c[i]));
  return s;
}

}  // namespace

FourierField rhs_3cont(const AveragingState& state, const AveragingConfig& cfg) {
  Engine eng(state, cfg);
  eng.set_interval(state.delta);
  state_t x, dx;
  eng.pack(state.field, state.transform_log, x);
  eng.rhs(x, dx, state.delta);
  return eng.unpack(dx, false);
}

void check_averaging_constraints(const AveragingState& st, const AveragingConfig& cfg) {
  const auto& p = st.params;
  int n = st.field.n, m = cfg.m;
  double ycoef = std::sqrt(double(n)) + 2 * std::sqrt(double(m));
  if (!(5 * ycoef * p.R < cfg.sigma))
    throw ConstraintViolation("width", "averaging: 5(√n+2√m)R < σ violated");
  if (!(2.0 * (n + 2 * m) <= p.K))
    throw ConstraintViolation("cutoff_dim", "averaging: 2(n+2m) ≤ K violated");
  if (!(2 * cfg.sigma / (5 * p.rho1) <= p.K))
    throw ConstraintViolation("cutoff_sigma", "averaging: 2σ/(5ρ1) ≤ K violated");
  double a_star =
      adt_closed_form(n, cfg.sigma, cfg.eps, cfg.mu, st.omega.t_bar(), p.K, p.rho3);
  if (!(a_star <= 4 * cfg.sigma * cfg.sigma / 25))
    throw ConstraintViolation("budget", "averaging: A(δ*) ≤ 4σ²/25 violated");
}

NormalFormResult run_averaging(const AveragingState& initial, const AveragingConfig& cfg) {
  if (cfg.enforce_constraints) check_averaging_constraints(initial, cfg);
  Engine eng(initial, cfg);
  const auto& params = initial.params;
  const auto& omega = initial.omega;
  const int n = initial.field.n;
  const std::size_t G = eng.grid_size(), M = eng.modes();

  NormalFormResult res;
  res.delta_star = stopping_time(params, omega);
  const double dstar = res.delta_star;

  // exit times and output times
  std::vector<double> exits;
  for (std::size_t i = 0; i < M; ++i) {
    double e = delta_exit(eng.mode(i), params, omega);
    if (e > 0 && e <= dstar) exits.push_back(e);
  }
  std::vector<double> times{0.0};
  times.insert(times.end(), exits.begin(), exits.end());
  for (int i = 1; i <= cfg.outputs; ++i) times.push_back(dstar * i / cfg.outputs);
  std::sort(times.begin(), times.end());
  std::vector<double> uniq;
  for (double t : times)
    if (uniq.empty() || t - uniq.back() > 1e-14 * std::max(1.0, dstar)) uniq.push_back(t);
  if (dstar > 0) uniq.back() = dstar;

  Budget budget(params, omega, cfg.eps, cfg.mu, cfg.sigma);
  MajorantSolution sol;
  sol.sigma = cfg.sigma;
  sol.K = params.K;
  sol.A = [&budget](double d) { return budget.A(d); };
  const double c_w = params.rho3 + 2 * params.rho2;

  state_t x;
  eng.pack(initial.field, initial.transform_log, x);

  auto record = [&](double delta) {
    const auto* H = reinterpret_cast<const cplx*>(x.data());
    for (std::size_t i = 0; i < M; ++i) {
      const IVec& k = eng.mode(i);
      double sup = sup_abs(H + i * G, G);
      double env_min = std::numeric_limits<double>::infinity();
      if (cfg.check_envelope) {
        double pre = cfg.sigma * cfg.mu * std::exp(-eng.norm_of(i) * c_w -
                                                   s_k(k, delta, params, omega) * omega.dot(k));
        for (std::size_t g = 0; g < G; ++g) {
          double env = pre * eval_Wk(sol, eng.Y(g), delta, eng.norm_of(i));
          env_min = std::min(env_min, env);
          double ratio = std::abs(H[i * G + g]) / env;
          res.envelope_worst = std::max(res.envelope_worst, ratio);
          if (ratio > 1) res.envelope_ok = false;
          ++res.envelope_checks;
        }
      }
      if (sup > 0) res.decay.push_back({delta, k, sup, env_min});
    }
    if (cfg.keep_snapshots) res.snapshots.push_back({delta, eng.unpack(x, false)});
  };

  record(0.0);
  double dt = dstar > 0 ? std::min(1e-3, dstar / 100) : 0;
  auto system = [&eng](const state_t& s, state_t& d, double t) { eng.rhs(s, d, t); };
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
    double t0 = uniq[i], t1 = uniq[i + 1];
    eng.set_interval(0.5 * (t0 + t1));
    auto stepper = odeint::make_controlled(cfg.atol, cfg.rtol, odeint::runge_kutta_dopri5<state_t>());
    try {
      res.steps += odeint::integrate_adaptive(stepper, system, x, t0, t1, std::min(dt, t1 - t0));
    } catch (const odeint::odeint_error& e) {
      throw std::runtime_error(std::string("averaging: step-size underflow: ") + e.what());
    }
    record(t1);
  }
  res.rhs_evals = eng.evals();

  FourierField final_field = eng.unpack(x, false);
  FourierField jlog = eng.unpack(x, true);
  std::tie(res.resonant, res.nonresonant) = split_resonant(final_field, omega);
  res.leaked_mass = x.back();

  const double rho2 = params.rho2, rho3 = params.rho3;
  res.nonres_norm = fourier_norm(res.nonresonant, rho2);
  double dtheta = 0;
  for (int j = 0; j < n; ++j) {
    FourierField d(n, res.nonresonant.grid, res.nonresonant.truncation_radius);
    for (const auto& [k, c] : res.nonresonant.modes) {
      Coef dc(c);
      for (auto& v : dc) v *= double(k[j]);
      d.modes[k] = std::move(dc);
    }
    dtheta = std::max(dtheta, fourier_norm(d, rho2));
  }
  res.nonres_dtheta_norm = dtheta;
  res.res_norm = fourier_norm(res.resonant, rho2);
  res.total_norm = fourier_norm(final_field, rho2);
  res.nonres_bound = 5 * cfg.mu / std::pow(rho2, n) * std::exp(-rho3 * params.K);
  res.res_bound = 5 * cfg.mu / std::pow(rho2, n);
  res.deviation_bound = 5 * cfg.eps * cfg.mu * omega.t_bar() / std::pow(rho2 + rho3, n);

  // |I' - I|: Σ_k ε |k_j| |J^k|; angles use ∂_I J^k
  const SlowGrid& grid = initial.field.grid;
  std::vector<std::vector<double>> act(n, std::vector<double>(G, 0.0)), ang = act;
  for (const auto& [k, c] : jlog.modes) {
    for (int j = 0; j < n; ++j) {
      if (k[j] == 0) continue;
      for (std::size_t g = 0; g < G; ++g) act[j][g] += cfg.eps * std::abs(k[j]) * std::abs(c[g]);
    }
    for (int j = 0; j < n; ++j) {
      if (grid.points(j) < 5) continue;
      Coef d = grid_derivative(grid, c, j);
      for (std::size_t g = 0; g < G; ++g) ang[j][g] += cfg.eps * std::abs(d[g]);
    }
  }
  for (int j = 0; j < n; ++j)
    for (std::size_t g = 0; g < G; ++g) {
      res.deviation_inf = std::max(res.deviation_inf, act[j][g]);
      res.deviation_angle_inf = std::max(res.deviation_angle_inf, ang[j][g]);
    }

  res.nonres_ok = res.nonres_norm <= res.nonres_bound && res.nonres_dtheta_norm <= res.nonres_bound;
  res.deviation_ok = std::max(res.deviation_inf, res.deviation_angle_inf) <= res.deviation_bound;
  return res;
}

// ------------------------------------------------------------------ one-angle reference

ReferenceReport run_1dof_reference(const ReferenceConfig& cfg) {
  const int Kt = cfg.truncation;
  const int P = cfg.grid_points;
  SlowGrid grid = SlowGrid::box(2, cfg.half_width, P);
  const std::size_t G = grid.size();
  const int M = 2 * Kt + 1;  // k = -Kt..Kt at index k + Kt

  FourierField h1(1, grid, Kt);
  for (const auto& [k, fn] : cfg.modes) {
    if (std::abs(k) > Kt) throw std::invalid_argument("reference: mode beyond truncation");
    Coef c(G);
    for (std::size_t g = 0; g < G; ++g) {
      RVec p = grid.point(g);
      c[g] = fn(p[0], p[1]);
    }
    auto it = h1.modes.find(IVec{k});
    if (it == h1.modes.end())
      h1.modes[IVec{k}] = c;
    else
      for (std::size_t g = 0; g < G; ++g) it->second[g] += c[g];
  }

  ReferenceReport rep;
  rep.mu = fourier_norm_with_gradient(h1, cfg.rho);
  rep.C = 4 * rep.mu * cfg.eps * (1 + 1 / cfg.rho);
  rep.max_flow_time = rep.C > 0 ? cfg.sigma / (8 * rep.C) : std::numeric_limits<double>::infinity();
  double end = cfg.delta_end;
  if (end > rep.max_flow_time) {
    end = rep.max_flow_time;
    rep.halted = true;
    try {
      solve_burgers_1dof(cfg.sigma, rep.C, 0.0, rep.max_flow_time * (1 + 1e-9));
    } catch (const std::domain_error&) {
      rep.domain_signal = true;
    }
  }
  rep.reached = end;

  state_t x(2 * M * G, 0.0);
  auto* H0 = reinterpret_cast<cplx*>(x.data());
  for (const auto& [k, c] : h1.modes) std::copy(c.begin(), c.end(), H0 + (k[0] + Kt) * G);
  const Coef mean = h1.modes.count(IVec{0}) ? h1.modes.at(IVec{0}) : Coef(G, cplx(0, 0));

  std::vector<double> Yg(G);
  for (std::size_t g = 0; g < G; ++g) {
    RVec p = grid.point(g);
    Yg[g] = std::abs(p[0]) + std::abs(p[1]);
  }

  auto system = [&](const state_t& s, state_t& d, double) {
    d.assign(s.size(), 0.0);
    const auto* H = reinterpret_cast<const cplx*>(s.data());
    auto* dH = reinterpret_cast<cplx*>(d.data());
    std::vector<Coef> dx(M), dy(M);
    std::vector<char> active(M);
    for (int i = 0; i < M; ++i) {
      Coef c(H + i * G, H + (i + 1) * G);
      if (i == Kt) c = mean;
      active[i] = std::any_of(c.begin(), c.end(), [](const cplx& v) { return v != cplx(0, 0); });
      if (!active[i]) continue;
      dx[i] = grid_derivative(grid, c, 0);
      dy[i] = grid_derivative(grid, c, 1);
    }
    const cplx I(0, 1);
    for (int k = -Kt; k <= Kt; ++k) {
      if (k == 0) continue;
      const int ki = k + Kt;
      for (std::size_t g = 0; g < G; ++g) dH[ki * G + g] = -double(std::abs(k)) * H[ki * G + g];
      for (int mm = -Kt; mm <= Kt; ++mm) {
        if (mm == 0) continue;
        int l = k - mm;
        if (l < -Kt || l > Kt) continue;
        int li = l + Kt, mi = mm + Kt;
        if (!active[li] || !active[mi]) continue;
        cplx s = I * cfg.eps * double(mm > 0 ? 1 : -1);
        for (std::size_t g = 0; g < G; ++g)
          dH[ki * G + g] += s * (dy[li][g] * dx[mi][g] - dx[li][g] * dy[mi][g]);
      }
    }
  };

  auto check = [&](double delta) {
    const auto* H = reinterpret_cast<const cplx*>(x.data());
    for (int k = -Kt; k <= Kt; ++k) {
      if (k == 0) continue;
      const int ki = k + Kt;
      double sup = 0, env_min = std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < G; ++g) {
        double s = cfg.sigma - Yg[g];
        if (s <= 0 || s * s - 8 * cfg.sigma * rep.C * delta < 0) continue;
        double env = std::exp(-std::abs(k) * delta) * rep.mu * std::exp(-std::abs(k) * cfg.rho) *
                     solve_burgers_1dof(cfg.sigma, rep.C, Yg[g], delta);
        double v = std::abs(H[ki * G + g]);
        sup = std::max(sup, v);
        env_min = std::min(env_min, env);
        double ratio = v / env;
        rep.worst_ratio = std::max(rep.worst_ratio, ratio);
        if (v > env * (1 + 1e-6)) rep.bound_ok = false;
        ++rep.checks;
      }
      rep.decay.push_back({delta, IVec{k}, sup, env_min});
    }
  };

  check(0.0);
  double dt = 1e-3;
  for (int i = 1; i <= cfg.outputs; ++i) {
    double t0 = end * (i - 1) / cfg.outputs, t1 = end * i / cfg.outputs;
    auto stepper = odeint::make_controlled(cfg.atol, cfg.rtol, odeint::runge_kutta_dopri5<state_t>());
    try {
      odeint::integrate_adaptive(stepper, system, x, t0, t1, std::min(dt, t1 - t0));
    } catch (const odeint::odeint_error& e) {
      throw std::runtime_error(std::string("reference: step-size underflow: ") + e.what());
    }
    check(t1);
  }
  return rep;
}

}  // namespace nekh
