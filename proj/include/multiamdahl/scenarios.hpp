#pragma once

// Prebuilt chip-design scenarios and the closed-form speedup laws for the
// heterogeneous (CPU + accelerators) configuration.

#include <string>
#include <vector>

#include "multiamdahl/model.hpp"
#include "multiamdahl/solver.hpp"

namespace multiamdahl::scenarios {

// Two-phase chip: a serial phase running on one big core whose performance
// scales as sqrt(area), and a parallel phase with linear scaling.
// Weights are (1 - t_parallel, t_parallel); t_parallel must lie in (0,1).
Scenario build_hill_marty(double t_parallel, double area);

enum class HillMartyMode {
  dedicated,  // serial core and parallel fabric occupy disjoint area
  pooled      // parallel phase also uses the big core: perf = a_p + sqrt(a_s)
};

// Optimal area split for either mode. x = {a_serial, a_parallel}.
// The pooled objective is not a per-segment sum (the big core shows up in
// both phases), so it is minimized directly over the serial area.
Allocation solve_hill_marty(double t_parallel, double area, HillMartyMode mode,
                            const solver::SolverConfig& cfg = {});

struct HetParams {
  int n = 1;           // number of accelerators
  double alpha = 1.0;  // accelerator efficiency relative to the CPU
  double delta = 0.0;  // fraction of work the accelerators can run
  double area = 1.0;   // chip area budget
  double d = 0.5;      // designer's assumed delta (sensitivity analysis only)
};

// CPU segment (weight 1-delta, f = 1/a) plus n accelerator segments
// (weight delta/n each, f = 1/(alpha*a)) sharing a static area budget.
Scenario build_heterogeneous(const HetParams& p);

// Optimal speedup of the heterogeneous chip over a homogeneous chip of the
// same area: (2*sqrt((n/alpha)*delta*(1-delta)) + 1 - delta*(1-n/alpha))^-1.
// Depends on n and alpha only through n/alpha; independent of area.
double het_speedup(const HetParams& p);

// Speedup when the chip was provisioned for parallel fraction p.d but the
// workload actually has fraction p.delta. The fixed accelerator areas follow
// a_i = a_0*sqrt(d/(alpha*n*(1-d))). Equals het_speedup when d == delta.
double sensitivity_speedup(const HetParams& p);

// Three-unit pipeline (cache, branch predictor, ALU) minimizing average
// latency per instruction, weighted by per-instruction event rates.
Scenario build_cpu_internal(double rate_cache, double rate_branch, double rate_alu,
                            const Cache& cache, const Branch& branch,
                            const Throughput& alu, double budget);

// Packet-processing pipeline: one segment per traffic class, weighted by
// arrival rate.
Scenario build_network_processor(const std::vector<double>& rates,
                                 const std::vector<EfficiencyFunction>& functions,
                                 double budget);

}  // namespace multiamdahl::scenarios
