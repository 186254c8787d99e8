#pragma once

#include <optional>

#include "nekh/lattice.hpp"
#include "nekh/model.hpp"

namespace nekh {

struct ApproximationResult {
  long q = 1;
  std::vector<long> p;
  double t_bar = 1;
  double err_inf = 0;
  RVec alpha_star;
  int pivot = -1;  // index fixed to ±1 by the rescaled variant, -1 for classic
};

ApproximationResult dirichlet_classic(const RVec& alpha, double Q);

// Which component is fixed to ±1 after rescaling by |α|∞.
enum class Pivot {
  FirstMax,  // first index attaining |α|∞
  First,     // index 0, rescaled by |α_0|; requires α_0 ≠ 0
};

ApproximationResult dirichlet_rescaled(const RVec& alpha, double Q, Pivot pivot = Pivot::FirstMax);

// Bound 1/(T̄ Q^{1/(n-1)}) of the rescaled variant.
double rescaled_bound(const ApproximationResult& r, double Q);

FrequencyVector to_frequency_vector(const ApproximationResult& r);

struct PeriodicAction {
  RVec I_star;
  FrequencyVector omega;
  ApproximationResult approx;
  double distance = 0;  // |I - I*|₂
  double bound = 0;     // √(n-1)/(M₋ T̄ Q^{1/(n-1)})
  int newton_iterations = 0;
};

PeriodicAction locate_periodic_action(const Polynomial& h0, const ConvexityConstants& cc,
                                      const RVec& I, double Q, Pivot pivot = Pivot::FirstMax);

}  // namespace nekh
