#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nekh/lattice.hpp"
#include "nekh/model.hpp"

namespace nekh {

class ConstraintViolation : public std::runtime_error {
 public:
  ConstraintViolation(std::string bullet, const std::string& what)
      : std::runtime_error(what), bullet_(std::move(bullet)) {}
  const std::string& bullet() const { return bullet_; }

 private:
  std::string bullet_;
};

struct AveragingConfig {
  double eps = 0;
  double mu = 1;     // ‖H1‖ with gradient, drives the envelope and the bounds
  double sigma = 1;  // slow-variable width
  int m = 0;         // degenerate pairs; grid axes are (I..., x..., y...)
  double m_plus = 1;
  bool convolutions = true;
  bool enforce_constraints = true;
  bool check_envelope = true;
  bool keep_snapshots = false;
  int outputs = 20;  // uniform output times on [0, δ*] besides the exit times
  double rtol = 1e-9;
  double atol = 1e-18;
  double exponent_cap = 700;
};

struct AveragingState {
  double delta = 0;
  FourierField field;            // current H^k
  PartitionParams params;
  FrequencyVector omega{IVec{1}, 1.0};
  GPart g_part{Polynomial(), RVec{}};
  FourierField transform_log;    // ∫ σ_k H^k dδ per mode
};

AveragingState make_state(const FourierField& h1, const PartitionParams& params,
                          const FrequencyVector& omega, const GPart& g);

// Time derivative of the coefficient field at the state's δ.
FourierField rhs_3cont(const AveragingState& state, const AveragingConfig& cfg);

// Coefficient multiplied by exp(-t <k, ∇G(I)>) at each grid point.
Coef apply_g(const Coef& coeff, const IVec& k, double t, const SlowGrid& grid, const GPart& g,
             double exponent_cap = 700);

struct DecayRow {
  double delta;
  IVec k;
  double abs_coeff;
  double envelope;
};

struct Snapshot {
  double delta;
  FourierField field;
};

struct NormalFormResult {
  FourierField resonant;
  FourierField nonresonant;
  double delta_star = 0;
  double deviation_inf = 0;       // action component
  double deviation_angle_inf = 0; // angle component from ∂_I of the same integral
  double nonres_norm = 0, nonres_bound = 0;
  double nonres_dtheta_norm = 0;
  double res_norm = 0, res_bound = 0;
  double total_norm = 0;
  double deviation_bound = 0;
  bool nonres_ok = false;
  bool deviation_ok = false;
  bool envelope_ok = true;
  double envelope_worst = 0;  // max |H^k| / envelope
  std::size_t envelope_checks = 0;
  double leaked_mass = 0;
  std::size_t steps = 0;
  std::size_t rhs_evals = 0;
  std::vector<DecayRow> decay;
  std::vector<Snapshot> snapshots;
};

// Checks the normal-form bullets and throws ConstraintViolation naming the first failure.
void check_averaging_constraints(const AveragingState& state, const AveragingConfig& cfg);

NormalFormResult run_averaging(const AveragingState& initial, const AveragingConfig& cfg);

// One angle, one degenerate pair, H0 = I: the pedagogical scenario.
struct ReferenceConfig {
  double eps = 1e-3;
  double rho = 1;
  double sigma = 1;
  double delta_end = 1;
  int truncation = 8;
  int grid_points = 9;
  double half_width = 0.2;  // x, y box
  int outputs = 20;
  double rtol = 1e-9;
  double atol = 1e-18;
  // perturbation: modes in θ with coefficient functions of (x, y) sampled on the grid
  std::vector<std::pair<int, std::function<cplx(double, double)>>> modes;
};

struct ReferenceReport {
  double mu = 0;
  double C = 0;
  double max_flow_time = 0;
  double reached = 0;
  bool halted = false;         // pushed past σ/(8C)
  bool domain_signal = false;  // Burgers solver rejects times past the halt
  bool bound_ok = true;
  double worst_ratio = 0;
  std::size_t checks = 0;
  std::vector<DecayRow> decay;
};

ReferenceReport run_1dof_reference(const ReferenceConfig& cfg);

}  // namespace nekh
