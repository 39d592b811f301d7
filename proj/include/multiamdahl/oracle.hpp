#pragma once

#include "multiamdahl/model.hpp"

namespace multiamdahl::oracle {

/// Exhaustive-search box.  One (low, high) pair per free variable, low > 0.
///
/// Free variables by resource model, positive-weight segments only:
///  - StaticBudget: the first n-1 allocations; the last is the remaining
///    budget (points with a non-positive remainder are skipped).
///  - InstantaneousPower / EnergyBudget / TdpBudget: all n allocations,
///    filtered against the constraints.
///  - AreaEnergy: the first n-1 areas, then all n voltages.
struct GridSpec {
  int resolution = 200;
  std::vector<std::pair<double, double>> bounds;
};

/// Per-model free-variable count for a scenario (must not exceed 4).
std::size_t free_dimensions(const Scenario& s);

/// Bounds that bracket any sane optimum, for callers without better
/// knowledge: static budgets span (1e-3, 1-1e-3) of the budget, coupled
/// models bound each variable by the point where it alone exhausts the
/// budget.
GridSpec default_grid_spec(const Scenario& s, int resolution);

/// Smallest objective over the grid.  Ties keep the lexicographically first
/// index vector, so results are reproducible and independent of evaluation
/// partitioning.  Throws std::invalid_argument for more than 4 free
/// dimensions or malformed bounds, InfeasibleError when no grid point is
/// feasible.
Allocation grid_search(const Scenario& s, const GridSpec& grid);

/// True when no feasible pairwise transfer of +-step resource (and, for
/// AreaEnergy, no +-step single-voltage tweak) improves the objective by
/// more than 1e-12.
bool perturbation_check(const Scenario& s, const Allocation& a, double step);

}  // namespace multiamdahl::oracle
