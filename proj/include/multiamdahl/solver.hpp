#pragma once

#include <stdexcept>
#include <vector>

#include "multiamdahl/model.hpp"

namespace multiamdahl {

class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The scenario violates a solver precondition that type construction could
/// not rule out (e.g. a closed form asked for on the wrong function family).
class InvalidModelError : public Error {
  using Error::Error;
};

/// No strictly positive allocation satisfies the constraints.
class InfeasibleError : public Error {
  using Error::Error;
};

namespace solver {

/// All tolerances are relative.
struct SolverConfig {
  double multiplier_tol = 1e-12;  // per-variable bisection width
  double budget_tol = 1e-9;       // constraint exhaustion
  double kkt_tol = 1e-7;          // stationarity accepted as converged
  int max_bisect_iters = 200;     // per 1-D bisection
  int max_outer_iters = 100;      // multiplier adjustment rounds
};

}  // namespace solver

/// Iteration budget exhausted before the tolerances were met.  Carries the
/// best iterate and the per-round constraint residuals seen so far.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& msg, Allocation best_seen,
                      std::vector<double> trace)
      : Error(msg), best(std::move(best_seen)), residual_trace(std::move(trace)) {}
  Allocation best;
  std::vector<double> residual_trace;
};

namespace solver {

/// Water-filling for a single additive budget.  Balances the weighted
/// marginal gains: for a trial multiplier mu > 0 each segment's
/// weight * f'(x) = -mu is inverted by monotone bisection, and mu is bisected
/// until the budget is exhausted.  Zero-weight segments receive x = 0.
Allocation solve_separable(const Scenario& s, const SolverConfig& cfg = {});

/// Two segments, weights (1 - t_parallel, t_parallel), multipliers 1/sqrt(a)
/// and 1/a, single area budget.  Solves the optimality relation
/// a_parallel = sqrt(2 t_parallel / (1 - t_parallel)) * a_serial^(3/4)
/// combined with the budget by scalar bisection.  x = {a_serial, a_parallel}.
Allocation closed_form_two_segment(double t_parallel, double area,
                                   const SolverConfig& cfg = {});

/// All-PowerLaw scenarios under a StaticBudget.  Expresses every allocation
/// through the first positive-weight segment,
///   a_i = a_0^((b0+1)/(bi+1)) * ((alpha0/b0)/(alphai/bi) * w_i/w_0)^(1/(bi+1)),
/// and bisects a_0 until the budget is exhausted.
Allocation closed_form_powerlaw(const Scenario& s, const SolverConfig& cfg = {});

/// InstantaneousPower, EnergyBudget or TdpBudget scenarios.  Outer bisection
/// on the constraint multiplier; inner per-segment stationarity solves by
/// 1-D bisection (cyclic sweeps for the energy and TDP couplings, an active
/// cap set for per-segment power limits).  Detects allocation-independent
/// energy constraints and returns a flagged result instead of pretending the
/// arbitrary iterate means anything.
Allocation solve_coupled(const Scenario& s, const SolverConfig& cfg = {});

/// AreaEnergy scenarios.  Voltage stationarity has the closed form
/// v = (2 mu a)^(-1/3); areas follow from per-segment bisection given both
/// multipliers, which are adjusted by nested bisection (area inside energy).
Allocation solve_area_voltage(const Scenario& s, const SolverConfig& cfg = {});

/// Dispatches to the numeric solver matching s.resource.
Allocation solve(const Scenario& s, const SolverConfig& cfg = {});

/// Relative stationarity violation of an allocation.
///
/// StaticBudget: max over positive-weight pairs of
/// |w_i f_i'(x_i) - w_j f_j'(x_j)| / max_k |w_k f_k'(x_k)|.  Coupled models
/// use the stored multipliers and report the worst Lagrangian gradient
/// component relative to the largest objective gradient component.
double kkt_residual(const Scenario& s, const Allocation& a);

}  // namespace solver
}  // namespace multiamdahl
