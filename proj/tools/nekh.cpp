#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>

#include <CLI11.hpp>
#include <tbb/global_control.h>

#include "nekh/averaging.hpp"
#include "nekh/config.hpp"
#include "nekh/constants.hpp"
#include "nekh/diophantine.hpp"
#include "nekh/harness.hpp"
#include "nekh/lattice.hpp"
#include "nekh/majorant.hpp"
#include "nekh/sums.hpp"

using namespace nekh;

namespace {

struct Globals {
  std::string config;
  std::string out = ".";
  unsigned seed = 1;
  int threads = 0;
};

std::string out_path(const Globals& g, const std::string& file) {
  std::filesystem::create_directories(g.out);
  return (std::filesystem::path(g.out) / file).string();
}

ScenarioConfig need_config(const Globals& g) {
  if (g.config.empty()) throw std::invalid_argument("--config is required for this subcommand");
  return load_scenario(g.config);
}

void print_report(const StabilityReport& r) {
  std::cout << "regime       " << (r.regime == Regime::global ? "global" : "local") << "\n"
            << "rho split    " << fmt17(r.rho_split.rho1) << " " << fmt17(r.rho_split.rho2) << " "
            << fmt17(r.rho_split.rho3) << "\n"
            << "confinement  " << fmt17(r.confinement) << "\n"
            << "ln T         " << fmt17(r.time_log) << "\n"
            << "K            " << fmt17(r.K) << "\n"
            << "R            " << fmt17(r.R) << "\n"
            << "Q            " << fmt17(r.Q) << "\n";
  for (const auto& c : r.constraints)
    std::cout << (c.satisfied ? "  ok   " : "  FAIL ") << c.name << ": " << fmt17(c.lhs)
              << (c.strict ? " < " : " <= ") << fmt17(c.rhs) << (c.note.empty() ? "" : "  (" + c.note + ")")
              << "\n";
}

FrequencyVector omega_from(const std::vector<int>& p, double t_bar) { return FrequencyVector(p, t_bar); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nekh: continuous averaging and stability constants"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "scenario INI file");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--seed", g.seed, "seed for randomized checks");
  app.add_option("--threads", g.threads, "worker threads (0: all)");

  // constants
  auto* c_cmd = app.add_subcommand("constants", "stability constants and constraint table");
  std::vector<double> c_eps;
  std::vector<double> c_split;
  double c_mu = -1;
  c_cmd->add_option("--eps", c_eps, "ε values (several give a sweep)");
  c_cmd->add_option("--rho-split", c_split, "fixed ρ1 ρ2 ρ3 instead of optimizing")->expected(3);
  c_cmd->add_option("--mu", c_mu, "override μ");

  // partition
  auto* p_cmd = app.add_subcommand("partition", "classify the diamond at a given δ");
  std::vector<int> p_p;
  double p_tbar = 1, p_K = 4, p_rho1 = 0.25, p_rho2 = 0.25, p_rho3 = 0.25;
  p_cmd->add_option("--p", p_p, "integer frequency numerators")->required();
  p_cmd->add_option("--tbar", p_tbar, "period T̄");
  p_cmd->add_option("--K", p_K, "cutoff");
  p_cmd->add_option("--rho1", p_rho1);
  p_cmd->add_option("--rho2", p_rho2);
  p_cmd->add_option("--rho3", p_rho3);
  int p_points = 21;
  double p_dmax = -1;
  p_cmd->add_option("--points", p_points, "δ grid points on [0, delta-max]");
  p_cmd->add_option("--delta-max", p_dmax, "grid end (default δ*)");

  // sums
  auto* s_cmd = app.add_subcommand("sums", "brute lattice sums against their bounds");
  std::vector<int> s_k;
  double s_eps = 1e-4, s_mu = 1, s_sigma = 1;
  s_cmd->add_option("--p", p_p, "integer frequency numerators")->required();
  s_cmd->add_option("--tbar", p_tbar);
  s_cmd->add_option("--K", p_K);
  s_cmd->add_option("--rho1", p_rho1);
  s_cmd->add_option("--rho2", p_rho2);
  s_cmd->add_option("--rho3", p_rho3);
  s_cmd->add_option("--points", p_points);
  s_cmd->add_option("--delta-max", p_dmax);
  s_cmd->add_option("--k", s_k, "single mode (default: worst over the diamond)");
  s_cmd->add_option("--eps", s_eps, "ε for the budget columns");
  s_cmd->add_option("--mu", s_mu);
  s_cmd->add_option("--sigma", s_sigma);

  // majorant
  auto* m_cmd = app.add_subcommand("majorant", "evaluate W and its PDE residual for constant a");
  double m_sigma = 1, m_K = 4, m_rate = 0.01, m_dmax = 1;
  int m_points = 11, m_samples = 1000;
  m_cmd->add_option("--sigma", m_sigma);
  m_cmd->add_option("--K", m_K);
  m_cmd->add_option("--rate", m_rate, "constant a");
  m_cmd->add_option("--delta-max", m_dmax);
  m_cmd->add_option("--points", m_points);
  m_cmd->add_option("--samples", m_samples, "random samples for the pointwise properties");

  // average
  auto* a_cmd = app.add_subcommand("average", "averaging stage of the pipeline");

  // dirichlet
  auto* d_cmd = app.add_subcommand("dirichlet", "simultaneous Diophantine approximation");
  std::vector<double> d_alpha;
  double d_Q = 10;
  std::string d_pivot = "first";
  bool d_classic = false;
  d_cmd->add_option("--alpha", d_alpha)->required();
  d_cmd->add_option("--Q", d_Q);
  d_cmd->add_option("--pivot", d_pivot, "first or first_max");
  d_cmd->add_flag("--classic", d_classic, "unscaled variant");

  auto* sim_cmd = app.add_subcommand("simulate", "symplectic integration of the scenario");
  auto* pipe_cmd = app.add_subcommand("pipeline", "dirichlet, constants, averaging, integration");

  CLI11_PARSE(app, argc, argv);

  std::unique_ptr<tbb::global_control> gc;
  if (g.threads > 0)
    gc = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism, g.threads);

  try {
    if (*c_cmd) {
      ScenarioConfig cfg = need_config(g);
      double mu = c_mu >= 0 ? c_mu : perturbation_mu(cfg);
      SystemConstants sys = system_constants(cfg.spec, mu);
      if (c_eps.empty()) c_eps.push_back(cfg.eps);
      std::vector<std::vector<std::string>> rows;
      for (double eps : c_eps) {
        StabilityReport rep;
        bool feasible;
        std::string binding;
        if (c_split.size() == 3) {
          rep = global_constants(sys, eps, RhoSplit{c_split[0], c_split[1], c_split[2]});
          feasible = rep.feasible();
          if (!feasible) binding = rep.first_violation()->name;
        } else {
          OptimizeResult opt = optimize_rho_split(sys, eps);
          rep = opt.report;
          feasible = opt.feasible;
          binding = opt.binding;
        }
        std::cout << "eps " << fmt17(eps) << (feasible ? "" : "  INFEASIBLE, binding " + binding) << "\n";
        print_report(rep);
        rows.push_back({fmt17(eps), feasible ? "1" : "0", fmt17(rep.rho_split.rho1), fmt17(rep.rho_split.rho2),
                        fmt17(rep.rho_split.rho3), fmt17(rep.confinement), fmt17(rep.time_log), fmt17(rep.K),
                        binding});
        if (c_eps.size() == 1) write_constraints_csv(out_path(g, "constraints.csv"), rep);
      }
      write_csv(out_path(g, "constants.csv"),
                {"eps", "feasible", "rho1", "rho2", "rho3", "confinement", "ln_T", "K", "binding"}, rows);
    } else if (*p_cmd || *s_cmd) {
      FrequencyVector om = omega_from(p_p, p_tbar);
      PartitionParams pp = PartitionParams::with_cutoff(p_rho1, p_rho2, p_rho3, p_K);
      double dstar = stopping_time(pp, om);
      double dmax = p_dmax >= 0 ? p_dmax : dstar;
      if (p_points < 2) throw std::invalid_argument("--points must be at least 2");
      std::vector<std::vector<std::string>> rows;
      if (*p_cmd) {
        std::vector<IVec> diamond = enumerate_diamond(p_K, om.n());
        for (int i = 0; i < p_points; ++i) {
          double delta = dmax * i / (p_points - 1);
          std::size_t counts[4] = {0, 0, 0, 0};
          for (const IVec& k : diamond) ++counts[static_cast<int>(classify(k, delta, pp, om))];
          rows.push_back({fmt17(delta), std::to_string(counts[0]), std::to_string(counts[1]),
                          std::to_string(counts[2]), std::to_string(counts[3])});
          std::cout << "delta " << fmt17(delta) << "  D+ " << counts[0] << "  D- " << counts[1]
                    << "  D0 " << counts[2] << "  D> " << counts[3] << "\n";
        }
        write_csv(out_path(g, "partition.csv"), {"delta", "n_plus", "n_minus", "n_zero", "n_greater"},
                  rows);
        std::cout << "delta* " << fmt17(dstar) << "\n";
      } else {
        Budget budget = budget_A(pp, om, s_eps, s_mu, s_sigma);
        std::size_t violations = 0;
        for (int i = 0; i < p_points; ++i) {
          double delta = dmax * i / (p_points - 1);
          SumTable table(delta, pp, om);
          std::vector<IVec> ks = s_k.empty() ? table.diamond() : std::vector<IVec>{s_k};
          double spm = 0, sgr = 0, s0 = 0, b0 = 0;
          for (const IVec& k : ks) {
            SumTriple t = s_k.empty() ? table.sums(k)
                                      : SumTriple{sum_brute({k, delta, pp, &om}, SumKind::pm),
                                                  sum_brute({k, delta, pp, &om}, SumKind::greater),
                                                  sum_brute({k, delta, pp, &om}, SumKind::zero)};
            double bz = bound_zero(k, delta, pp, om).k_dependent;
            violations += t.zero > bz;
            spm = std::max(spm, t.pm);
            sgr = std::max(sgr, t.greater);
            s0 = std::max(s0, t.zero);
            b0 = std::max(b0, bz);
          }
          double bpm = bound_pm(delta, pp, om), bgr = bound_greater(delta, pp, om);
          violations += (spm > bpm) + (sgr > bgr);
          rows.push_back({fmt17(delta), fmt17(spm), fmt17(bpm), fmt17(sgr), fmt17(bgr), fmt17(s0),
                          fmt17(b0), fmt17(budget.a(delta)), fmt17(budget.A(delta))});
        }
        write_csv(out_path(g, "sums.csv"),
                  {"delta", "sigma_pm_brute", "sigma_pm_bound", "sigma_gt_brute", "sigma_gt_bound",
                   "sigma_0_brute", "sigma_0_bound", "a", "A"},
                  rows);
        std::cout << p_points << " delta points, " << violations << " bound violations, A(delta*) "
                  << fmt17(budget.A_star()) << "\n";
      }
    } else if (*m_cmd) {
      MajorantSolution sol = constant_rate_solution(m_sigma, m_K, m_rate);
      MajorantGrid grid;
      for (int i = 0; i < m_points; ++i) {
        grid.Y.push_back(m_sigma / 5 * i / (m_points - 1));
        grid.delta.push_back(m_dmax * i / (m_points - 1));
      }
      grid.k_norms = {0, 1, m_K / 2, m_K, 2 * m_K};
      PdeResidual res = check_W_pde(sol, grid);
      std::vector<std::vector<std::string>> rows;
      for (double Y : grid.Y)
        for (double d : grid.delta) {
          std::string w;
          try {
            w = fmt17(eval_W(sol, Y, d));
          } catch (const std::domain_error&) {
            w = "nan";
          }
          rows.push_back({fmt17(Y), fmt17(d), w});
        }
      write_csv(out_path(g, "majorant.csv"), {"Y", "delta", "W"}, rows);
      // random admissible samples for the pointwise properties
      std::mt19937_64 rng(g.seed);
      std::uniform_real_distribution<double> u(0, 1);
      MajorantGrid rg;
      for (int i = 0; i < m_samples; ++i) {
        rg.Y.push_back(u(rng) * m_sigma / 5);
        rg.delta.push_back(u(rng) * m_dmax);
      }
      rg.k_norms = grid.k_norms;
      TrReport tr = check_tr_properties(sol, rg);
      std::cout << "pde residual W " << fmt17(res.w_residual) << "  W^k " << fmt17(res.wk_residual) << " over "
                << res.points << " points\n";
      for (int i = 0; i < 5; ++i)
        std::cout << "property " << i + 1 << (tr.item[i] ? " holds" : " FAILS") << ", worst excess "
                  << fmt17(tr.worst[i]) << "\n";
    } else if (*a_cmd || *pipe_cmd) {
      ScenarioConfig cfg = need_config(g);
      PipelineOptions opt;
      opt.run_integration = static_cast<bool>(*pipe_cmd);
      PipelineReport rep = run_pipeline(cfg, opt);
      write_pipeline_bundle(g.out, rep);
      std::cout << summarize(rep);
      return rep.all_pass() ? 0 : 2;
    } else if (*d_cmd) {
      Pivot pv = d_pivot == "first_max" ? Pivot::FirstMax : Pivot::First;
      if (d_pivot != "first" && d_pivot != "first_max") throw std::invalid_argument("--pivot: first or first_max");
      ApproximationResult r = d_classic ? dirichlet_classic(d_alpha, d_Q) : dirichlet_rescaled(d_alpha, d_Q, pv);
      double bound = d_classic ? std::pow(d_Q, -1.0 / d_alpha.size()) : rescaled_bound(r, d_Q);
      std::cout << "q " << r.q << "\nT_bar " << fmt17(r.t_bar) << "\np";
      for (long v : r.p) std::cout << " " << v;
      std::cout << "\nerr_inf " << fmt17(r.err_inf) << "\nbound " << fmt17(bound) << "\n";
    } else if (*sim_cmd) {
      ScenarioConfig cfg = need_config(g);
      std::vector<RunReport> runs = integrate(cfg);
      bool ok = true;
      for (std::size_t i = 0; i < runs.size(); ++i) {
        write_run_csv(out_path(g, "run_" + std::to_string(i) + ".csv"), runs[i]);
        std::cout << "run " << i << ": drift " << fmt17(runs[i].max_action_drift) << " <= "
                  << fmt17(runs[i].predicted_confinement) << (runs[i].bound_held ? "  PASS" : "  FAIL")
                  << ", energy drift " << fmt17(runs[i].energy_drift) << ", log10 fraction of T covered "
                  << fmt17(runs[i].covered_log10) << "\n";
        ok = ok && runs[i].bound_held;
      }
      return ok ? 0 : 2;
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << (e.binding().empty() ? "" : " (binding: " + e.binding() + ")") << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
