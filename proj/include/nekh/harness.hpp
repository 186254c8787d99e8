#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nekh/averaging.hpp"
#include "nekh/constants.hpp"
#include "nekh/diophantine.hpp"
#include "nekh/model.hpp"

namespace nekh {

// amp · Π s_j^{e_j} · e^{i<k,θ>}, slow variables s = (I, x, y)
struct TrigTerm {
  IVec k;
  cplx amp;
  std::vector<int> slow_exp;  // empty means constant
};

// H1 = Re Σ terms. Analytic in every variable, so the integrator gets exact derivatives.
class TrigPerturbation {
 public:
  TrigPerturbation() = default;
  TrigPerturbation(int n, int m, std::vector<TrigTerm> terms);

  int n() const { return n_; }
  int m() const { return m_; }
  const std::vector<TrigTerm>& terms() const { return terms_; }
  int max_mode_norm() const;

  // z = (I, θ, x, y)
  double value(const double* z) const;
  // adds scale·∇H1 and scale·∇²H1 at z
  void accumulate(const double* z, double scale, Eigen::Ref<Eigen::VectorXd> g,
                  Eigen::Ref<Eigen::MatrixXd> h) const;

  // Fourier coefficients on a grid over (I - origin, x, y).
  FourierField sample(const SlowGrid& grid, const RVec& origin, int truncation) const;

 private:
  int n_ = 0, m_ = 0;
  std::vector<TrigTerm> terms_;
};

struct InitialCondition {
  RVec I, theta, x, y;
};

struct ScenarioConfig {
  std::string name = "scenario";
  HamiltonianSpec spec;
  TrigPerturbation h1;
  double eps = 0;
  std::vector<InitialCondition> initial;
  double horizon = 0;
  double dt = 0.01;
  long max_steps = 10000000;
  long output_every = 0;  // 0: about 1000 rows per trajectory
  double Q = 0;           // 0: ε^{-(n-1)/2n}
  Pivot pivot = Pivot::FirstMax;
  std::optional<RhoSplit> rho_split;
  Regime regime = Regime::global;
  double local_r = 0;  // local regime: radius of the initial actions around I*
  double xy_half_width = 0;  // box for (x, y) in the spec-level sample grid
  int slow_points = 5;       // averaging grid points per slow axis
  int truncation = 0;        // 0: ceil(K) + n
  int averaging_outputs = 20;
  std::string out_dir;
  void validate() const;
};

// Full vector field and Jacobian of H0 + ε H1 in z = (I, θ, x, y).
class Dynamics {
 public:
  Dynamics(const Polynomial& h0, const TrigPerturbation& h1, double eps);
  int dim() const { return N_; }
  int n() const { return n_; }
  int m() const { return m_; }
  double energy(const Eigen::VectorXd& z) const;
  Eigen::VectorXd field(const Eigen::VectorXd& z) const;
  // f = Ω∇H and Df = Ω∇²H
  void field_jacobian(const Eigen::VectorXd& z, Eigen::VectorXd& f, Eigen::MatrixXd& df) const;
  Eigen::MatrixXd omega_form() const;

 private:
  void gradient_hessian(const Eigen::VectorXd& z) const;
  const Polynomial* h0_;
  const TrigPerturbation* h1_;
  double eps_;
  int n_, m_, N_;
  mutable Eigen::VectorXd g_;
  mutable Eigen::MatrixXd h_;
};

// One implicit-midpoint step in place; returns the Newton iteration count.
int midpoint_step(const Dynamics& dyn, Eigen::VectorXd& z, double h);
// Exact Jacobian of the midpoint map at z (z advanced by the step).
Eigen::MatrixXd midpoint_jacobian(const Dynamics& dyn, const Eigen::VectorXd& z, double h);

struct StepSample {
  long step;
  double t;
  double action_drift;
  double energy;
  double xy_radius;  // max(|x|∞, |y|∞), 0 for m = 0
};

struct RunReport {
  double max_action_drift = 0;
  double predicted_confinement = 0;
  double energy_drift = 0;
  bool bound_held = false;
  long steps = 0;
  double t_end = 0;
  double covered_log10 = 0;  // log10(t_end / 𝒯)
  bool xy_exited = false;
  int max_newton = 0;
  std::vector<StepSample> samples;
  std::string csv_path;
};

RunReport integrate_trajectory(const ScenarioConfig& cfg, const InitialCondition& ic,
                               double predicted_confinement, double time_log);
// Every initial condition, in parallel, reports in input order.
std::vector<RunReport> integrate(const ScenarioConfig& cfg, double predicted_confinement,
                                 double time_log);
// Confinement from the configured regime; ε = 0 gives 0.
std::vector<RunReport> integrate(const ScenarioConfig& cfg);

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, std::string binding, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what),
        stage_(std::move(stage)),
        binding_(std::move(binding)) {}
  const std::string& stage() const { return stage_; }
  const std::string& binding() const { return binding_; }

 private:
  std::string stage_, binding_;
};

struct PipelineReport {
  double mu = 0;
  double R = 0;  // ℛ with the located T̄
  std::optional<PeriodicAction> periodic;
  StabilityReport constants;
  std::optional<NormalFormResult> averaging;
  std::vector<RunReport> runs;
  bool nonres_ok = true, deviation_ok = true, envelope_ok = true, drift_ok = true;
  std::vector<std::string> notes;
  bool all_pass() const { return nonres_ok && deviation_ok && envelope_ok && drift_ok; }
};

struct PipelineOptions {
  bool run_integration = true;
  bool keep_samples = true;
};

// Dirichlet → constants → averaging → integration; failures surface as StageError.
PipelineReport run_pipeline(const ScenarioConfig& cfg, const PipelineOptions& opt = {});

// Sample grid for the averaging stage: I half-width ℛ/√n, (x, y) half-width ℛ/√m.
SlowGrid averaging_grid(int n, int m, double R, int points);

// μ of H1 on the spec-level grid, with gradient.
double perturbation_mu(const ScenarioConfig& cfg);

std::string fmt17(double v);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
void write_run_csv(const std::string& path, const RunReport& r);
void write_decay_csv(const std::string& path, const std::vector<DecayRow>& rows);
void write_constraints_csv(const std::string& path, const StabilityReport& rep);
std::string summarize(const PipelineReport& rep);
void write_pipeline_bundle(const std::string& dir, const PipelineReport& rep);

}  // namespace nekh
