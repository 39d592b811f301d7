#include "multiamdahl/scenarios.hpp"

#include <cmath>
#include <stdexcept>

namespace multiamdahl::scenarios {

namespace {

void check_het(const HetParams& p) {
  if (p.n < 1) throw std::domain_error("HetParams: n must be a positive integer");
  if (!(p.alpha > 0.0)) throw std::domain_error("HetParams: alpha must be positive");
  if (!(p.delta >= 0.0 && p.delta < 1.0))
    throw std::domain_error("HetParams: delta must lie in [0,1)");
  if (!(p.area > 0.0)) throw std::domain_error("HetParams: area must be positive");
}

double pooled_time(double t, double area, double a_s) {
  return (1.0 - t) / std::sqrt(a_s) + t / (area - a_s + std::sqrt(a_s));
}

double pooled_slope(double t, double area, double a_s) {
  double r = std::sqrt(a_s);
  double perf = area - a_s + r;
  return -0.5 * (1.0 - t) / (a_s * r) + t * (1.0 - 0.5 / r) / (perf * perf);
}

// Both time terms decrease with a_s while a_s < 1/4 (growing the big core
// speeds up the parallel phase too), so the search starts there.
double pooled_optimum(double t, double area) {
  if (area <= 0.25) return area;
  const int scan = 4096;
  double lo = 0.25, hi = area;
  double best_t = pooled_time(t, area, hi);
  double ratio = std::pow(hi / lo, 1.0 / scan);
  double a = lo;
  int best_k = scan;
  for (int k = 0; k <= scan; ++k, a *= ratio) {
    double val = pooled_time(t, area, std::min(a, hi));
    if (val < best_t) {
      best_t = val;
      best_k = k;
    }
  }
  double b_lo = best_k > 0 ? lo * std::pow(ratio, best_k - 1) : lo;
  double b_hi = best_k < scan ? lo * std::pow(ratio, best_k + 1) : hi;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c1 = b_hi - gr * (b_hi - b_lo), c2 = b_lo + gr * (b_hi - b_lo);
  double f1 = pooled_time(t, area, c1), f2 = pooled_time(t, area, c2);
  for (int it = 0; it < 300 && b_hi - b_lo > 1e-15 * area; ++it) {
    if (f1 < f2) {
      b_hi = c2;
      c2 = c1;
      f2 = f1;
      c1 = b_hi - gr * (b_hi - b_lo);
      f1 = pooled_time(t, area, c1);
    } else {
      b_lo = c1;
      c1 = c2;
      f1 = f2;
      c2 = b_lo + gr * (b_hi - b_lo);
      f2 = pooled_time(t, area, c2);
    }
  }
  double a_s = 0.5 * (b_lo + b_hi);
  if (pooled_time(t, area, area) <= pooled_time(t, area, a_s)) a_s = area;
  return std::min(a_s, area);
}

}  // namespace

Scenario build_hill_marty(double t_parallel, double area) {
  if (!(t_parallel > 0.0 && t_parallel < 1.0))
    throw std::domain_error("build_hill_marty: t_parallel must lie in (0,1)");
  if (!(area > 0.0)) throw std::domain_error("build_hill_marty: area must be positive");
  std::vector<Segment> segs{
      {"serial", 1.0 - t_parallel, PowerLaw{1.0, 0.5}},
      {"parallel", t_parallel, PowerLaw{1.0, 1.0}},
  };
  return Scenario(segs, StaticBudget{area}, Objective::total_time);
}

Allocation solve_hill_marty(double t_parallel, double area, HillMartyMode mode,
                            const solver::SolverConfig& cfg) {
  if (mode == HillMartyMode::dedicated)
    return solver::solve_separable(build_hill_marty(t_parallel, area), cfg);

  if (!(t_parallel > 0.0 && t_parallel < 1.0))
    throw std::domain_error("solve_hill_marty: t_parallel must lie in (0,1)");
  if (!(area > 0.0)) throw std::domain_error("solve_hill_marty: area must be positive");

  double a_s = pooled_optimum(t_parallel, area);
  Allocation out;
  out.x = {a_s, area - a_s};
  out.objective_value = pooled_time(t_parallel, area, a_s);
  double perf = area - a_s + std::sqrt(a_s);
  out.multipliers = {t_parallel / (perf * perf)};
  double slope = pooled_slope(t_parallel, area, a_s);
  if (a_s >= area * (1.0 - 1e-9))
    out.kkt_residual = std::max(0.0, -slope) * area / out.objective_value;
  else
    out.kkt_residual = std::fabs(slope) * a_s / out.objective_value;
  return out;
}

Scenario build_heterogeneous(const HetParams& p) {
  check_het(p);
  std::vector<Segment> segs;
  segs.push_back({"cpu", 1.0 - p.delta, PowerLaw{1.0, 1.0}});
  for (int i = 1; i <= p.n; ++i)
    segs.push_back({"acc_" + std::to_string(i), p.delta / p.n, PowerLaw{p.alpha, 1.0}});
  return Scenario(segs, StaticBudget{p.area}, Objective::total_time);
}

double het_speedup(const HetParams& p) {
  check_het(p);
  double r = p.n / p.alpha;
  double denom = 2.0 * std::sqrt(r * p.delta * (1.0 - p.delta)) + 1.0 - p.delta * (1.0 - r);
  return 1.0 / denom;
}

double sensitivity_speedup(const HetParams& p) {
  check_het(p);
  if (!(p.d > 0.0 && p.d < 1.0))
    throw std::domain_error("sensitivity_speedup: d must lie in (0,1)");
  double r = p.n / p.alpha;
  double denom = (1.0 + p.delta / p.d - 2.0 * p.delta) * std::sqrt(r * p.d / (1.0 - p.d)) +
                 1.0 - p.delta * (1.0 - r);
  return 1.0 / denom;
}

Scenario build_cpu_internal(double rate_cache, double rate_branch, double rate_alu,
                            const Cache& cache, const Branch& branch, const Throughput& alu,
                            double budget) {
  std::vector<Segment> segs{
      {"cache", rate_cache, cache},
      {"branch", rate_branch, branch},
      {"alu", rate_alu, alu},
  };
  return Scenario(segs, StaticBudget{budget}, Objective::average_latency);
}

Scenario build_network_processor(const std::vector<double>& rates,
                                 const std::vector<EfficiencyFunction>& functions,
                                 double budget) {
  if (rates.empty() || rates.size() != functions.size())
    throw std::invalid_argument(
        "build_network_processor: rates and functions must have the same nonzero length");
  std::vector<Segment> segs;
  for (std::size_t i = 0; i < rates.size(); ++i)
    segs.push_back({"class_" + std::to_string(i + 1), rates[i], functions[i]});
  return Scenario(segs, StaticBudget{budget}, Objective::average_latency);
}

}  // namespace multiamdahl::scenarios
