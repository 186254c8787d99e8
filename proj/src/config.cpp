#include "nekh/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace nekh {

namespace pt = boost::property_tree;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  boost::split(parts, s, [sep](char c) { return c == sep; });
  for (auto& p : parts) boost::trim(p);
  parts.erase(std::remove_if(parts.begin(), parts.end(), [](const std::string& p) { return p.empty(); }),
              parts.end());
  return parts;
}

RVec numbers(const std::string& s, const std::string& key) {
  std::istringstream in(s);
  RVec v;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: bad number '" + tok + "' in " + key);
    }
  }
  return v;
}

IVec integers(const std::string& s, const std::string& key) {
  IVec out;
  for (double d : numbers(s, key)) {
    if (d != std::round(d)) throw std::invalid_argument("config: " + key + " needs integers");
    out.push_back(static_cast<int>(d));
  }
  return out;
}

RVec sized(const pt::ptree& t, const std::string& key, std::size_t n) {
  RVec v = numbers(t.get<std::string>(key), key);
  if (v.size() != n) throw std::invalid_argument("config: " + key + " needs " + std::to_string(n) + " values");
  return v;
}

}  // namespace

ScenarioConfig parse_scenario(std::istream& in) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  const pt::ptree& sys = root.get_child("system");
  const pt::ptree empty;
  const pt::ptree& per = root.get_child_optional("perturbation") ? root.get_child("perturbation") : empty;
  const pt::ptree& run = root.get_child_optional("run") ? root.get_child("run") : empty;

  ScenarioConfig cfg;
  cfg.name = sys.get<std::string>("name", "scenario");
  HamiltonianSpec& spec = cfg.spec;
  spec.n = sys.get<int>("n");
  spec.m = sys.get<int>("m", 0);
  const int n = spec.n, m = spec.m;
  if (n < 1 || m < 0) throw std::invalid_argument("config: bad n or m");
  spec.rho = sys.get<double>("rho");
  spec.sigma = sys.get<double>("sigma");

  // H0 = ½ IᵀAI + bᵀI
  auto rows = split(sys.get<std::string>("hessian"), ';');
  if (static_cast<int>(rows.size()) != n) throw std::invalid_argument("config: hessian needs n rows");
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i) {
    RVec r = numbers(rows[i], "hessian");
    if (static_cast<int>(r.size()) != n) throw std::invalid_argument("config: hessian row length");
    for (int j = 0; j < n; ++j) A(i, j) = r[j];
  }
  if (!A.isApprox(A.transpose())) throw std::invalid_argument("config: hessian must be symmetric");
  RVec b = sys.get_optional<std::string>("linear") ? sized(sys, "linear", n) : RVec(n, 0.0);
  spec.h0 = Polynomial::quadratic(A, Eigen::Map<Eigen::VectorXd>(b.data(), n));
  spec.action_lo = sized(sys, "action_lo", n);
  spec.action_hi = sized(sys, "action_hi", n);
  cfg.xy_half_width = sys.get<double>("xy_half_width", m > 0 ? spec.sigma / 2 : 0.0);

  if (sys.get_optional<double>("m_minus")) {
    spec.convexity.m_minus = sys.get<double>("m_minus");
    spec.convexity.m_plus = sys.get<double>("m_plus");
    spec.convexity.grad_inf = sys.get<double>("grad_inf");
    spec.convexity.grad3_inf = sys.get<double>("grad3_inf", 0.0);
  } else {
    spec.convexity = estimate_convexity(spec, sys.get<int>("convexity_grid", 11));
  }

  std::vector<TrigTerm> terms;
  for (const auto& item : split(per.get<std::string>("modes", ""), ';')) {
    auto f = split(item, ':');
    if (f.size() < 2 || f.size() > 3)
      throw std::invalid_argument("config: mode entry must be 'k : re im [: exponents]'");
    TrigTerm t;
    t.k = integers(f[0], "modes");
    RVec a = numbers(f[1], "modes");
    if (a.empty() || a.size() > 2) throw std::invalid_argument("config: mode amplitude must be 're [im]'");
    t.amp = cplx(a[0], a.size() > 1 ? a[1] : 0.0);
    if (f.size() == 3) t.slow_exp = integers(f[2], "modes");
    terms.push_back(std::move(t));
  }
  cfg.h1 = TrigPerturbation(n, m, terms);
  {
    RVec lo = spec.action_lo, hi = spec.action_hi;
    for (int j = 0; j < 2 * m; ++j) {
      lo.push_back(-cfg.xy_half_width);
      hi.push_back(cfg.xy_half_width);
    }
    int pts = per.get<int>("grid_points", 5);
    SlowGrid grid(lo, hi, std::vector<int>(n + 2 * m, pts));
    spec.perturbation = cfg.h1.sample(grid, RVec{}, std::max(cfg.h1.max_mode_norm(), 0));
  }

  cfg.eps = run.get<double>("eps", 0.0);
  cfg.dt = run.get<double>("dt", 0.01);
  cfg.horizon = run.get<double>("horizon", 0.0);
  cfg.max_steps = run.get<long>("max_steps", 10000000);
  cfg.output_every = run.get<long>("output_every", 0);
  cfg.Q = run.get<double>("Q", 0.0);
  std::string pivot = run.get<std::string>("pivot", "first_max");
  if (pivot == "first_max")
    cfg.pivot = Pivot::FirstMax;
  else if (pivot == "first")
    cfg.pivot = Pivot::First;
  else
    throw std::invalid_argument("config: pivot must be first_max or first");
  if (run.get_optional<double>("rho1")) {
    cfg.rho_split = RhoSplit{run.get<double>("rho1"), run.get<double>("rho2"), run.get<double>("rho3")};
  }
  std::string regime = run.get<std::string>("regime", "global");
  if (regime == "global")
    cfg.regime = Regime::global;
  else if (regime == "local")
    cfg.regime = Regime::local;
  else
    throw std::invalid_argument("config: regime must be global or local");
  cfg.local_r = run.get<double>("r", 0.0);
  cfg.slow_points = run.get<int>("slow_points", 5);
  cfg.truncation = run.get<int>("truncation", 0);
  cfg.averaging_outputs = run.get<int>("averaging_outputs", 20);
  cfg.out_dir = run.get<std::string>("out_dir", "");

  const std::size_t width = 2 * n + 2 * m;
  for (const auto& item : split(run.get<std::string>("initial", ""), ';')) {
    RVec v = numbers(item, "initial");
    if (v.size() != width)
      throw std::invalid_argument("config: initial condition needs " + std::to_string(width) + " values (I θ x y)");
    InitialCondition ic;
    ic.I.assign(v.begin(), v.begin() + n);
    ic.theta.assign(v.begin() + n, v.begin() + 2 * n);
    ic.x.assign(v.begin() + 2 * n, v.begin() + 2 * n + m);
    ic.y.assign(v.begin() + 2 * n + m, v.end());
    cfg.initial.push_back(std::move(ic));
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot open " + path);
  return parse_scenario(f);
}

}  // namespace nekh
