#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace multiamdahl {

/// Execution-time multiplier f(x) = 1 / (alpha * x^beta).
///
/// x is the resource assigned to the segment's hardware unit, normalized so
/// that one unit of resource corresponds to the baseline design.  alpha > 0
/// scales the benefit of the unit, beta > 0 controls how quickly the benefit
/// saturates.  Strictly decreasing and convex on x > 0.
struct PowerLaw {
  double alpha;
  double beta;
  PowerLaw(double alpha, double beta);
};

/// Fraction curve 1 - (1 - base) * x^(-rate), clamped to [0, 1).
///
/// Models hit or prediction rates that start at `base` for a unit-sized
/// structure and saturate toward 1 as the structure grows.  Intended for
/// x >= 1; below (1-base)^(1/rate) the clamp makes the curve flat at zero.
struct SaturatingCurve {
  double base;
  double rate;
  SaturatingCurve(double base, double rate);
  double value(double x) const;
  double deriv(double x) const;
  // largest x at which the lower clamp is still active (always <= 1)
  double flat_below() const;
};

/// Cache access cost: hit%(x) * t_hit + (1 - hit%(x)) * t_miss.
struct Cache {
  SaturatingCurve hit;
  double t_hit;
  double t_miss;
  Cache(SaturatingCurve hit, double t_hit, double t_miss);
};

/// Branch resolution cost: (1 - predict%(x)) * t_mispredict.
struct Branch {
  SaturatingCurve predict;
  double t_mispredict;
  Branch(SaturatingCurve predict, double t_mispredict);
};

/// Pure throughput unit: f(x) = t_unit / x.
struct Throughput {
  double t_unit;
  explicit Throughput(double t_unit);
};

/// Measured (x, f(x)) samples, log(f) interpolated linearly in log(x).
///
/// Points must be strictly increasing in x with strictly decreasing positive
/// f.  Evaluation outside [x_min, x_max] is a domain error; the derivative is
/// a central finite difference of the interpolant.
struct Tabulated {
  std::vector<std::pair<double, double>> points;
  explicit Tabulated(std::vector<std::pair<double, double>> points);
  double x_min() const { return points.front().first; }
  double x_max() const { return points.back().first; }
};

using EfficiencyFunction = std::variant<PowerLaw, Cache, Branch, Throughput, Tabulated>;

/// Value of the execution-time multiplier at resource x.  Throws
/// std::domain_error for x <= 0, non-finite x, or x outside a Tabulated range.
double eval(const EfficiencyFunction& f, double x);

/// d f / d x.  Analytic except for Tabulated, which uses a central finite
/// difference with step max(1e-6 * x, 1e-9) clipped to the sample range.
double eval_deriv(const EfficiencyFunction& f, double x);

/// False only for Tabulated data whose piecewise power-law slopes steepen
/// with x; every closed-form variant is convex on its smooth domain.
bool is_convex(const EfficiencyFunction& f);

/// One workload phase: `weight` is the time fraction it contributes on the
/// baseline design (or an arrival rate for latency objectives).
struct Segment {
  std::string name;
  double weight;
  EfficiencyFunction efficiency;
};

/// Single additive budget: sum of x_i <= total.
struct StaticBudget {
  double total;
};

/// Per-segment peak power caps x_i + sum_j k_j x_j <= total, where k_j is the
/// static (leakage) fraction each unit draws whenever the chip is on.
struct InstantaneousPower {
  double total;
  std::vector<double> k;
};

/// Whole-run energy budget:
///   (sum_j k_j x_j) * (sum_i f_i(x_i) w_i) + sum_i f_i(x_i) w_i x_i <= total.
struct EnergyBudget {
  double total;
  std::vector<double> k;
};

/// Sustained (thermal) power budget:
///   sum_i k_i x_i + (sum_i f_i w_i x_i) / (sum_i f_i w_i) <= total.
struct TdpBudget {
  double total;
  std::vector<double> k;
};

/// Joint die-area and energy budget for units with a voltage knob.  The
/// per-segment multiplier is fixed at 1/(v * sqrt(a)) and the energy drawn is
/// w * sqrt(a) * v^2, so segment efficiency functions are not consulted.
struct AreaEnergy {
  double area_total;
  double energy_total;
};

using ResourceModel =
    std::variant<StaticBudget, InstantaneousPower, EnergyBudget, TdpBudget, AreaEnergy>;

enum class Objective { total_time, average_latency };

/// A complete allocation problem.  The constructor validates everything that
/// can be checked without solving: finite positive budgets, at least one
/// positive segment weight, unique non-empty names, per-segment k vectors of
/// matching length, and TotalTime-only for AreaEnergy.
struct Scenario {
  std::vector<Segment> segments;
  ResourceModel resource;
  Objective objective;

  Scenario(std::vector<Segment> segments, ResourceModel resource, Objective objective);
};

/// Solver or oracle output.  `x` holds one resource amount per segment in
/// scenario order (zero for zero-weight segments); `voltage` is parallel to
/// `x` and only populated for AreaEnergy.  `multipliers` holds one value per
/// constraint.  `local_only` marks stationary points of non-convex inputs
/// that cannot be certified global; `degenerate_constraint` marks problems
/// whose constraint turned out to be allocation-independent.
struct Allocation {
  std::vector<double> x;
  std::vector<double> voltage;
  double objective_value = 0.0;
  std::vector<double> multipliers;
  double kkt_residual = 0.0;
  bool local_only = false;
  bool degenerate_constraint = false;
};

/// Objective value sum_i weight_i * f_i(x_i).  Zero-weight segments are
/// skipped entirely, so their x may be zero.  Throws std::invalid_argument on
/// a length mismatch and std::domain_error on non-positive x for an active
/// segment.  Not defined for AreaEnergy scenarios (use the overload below).
double weighted_cost(const Scenario& s, std::span<const double> x);

/// AreaEnergy objective sum_i weight_i / (v_i * sqrt(a_i)).
double weighted_cost(const Scenario& s, std::span<const double> area,
                     std::span<const double> voltage);

struct ConstraintUsage {
  std::string id;
  double lhs;
  double budget;
};

/// Left-hand side of every constraint at allocation x, summed in segment
/// index order so repeated calls are bitwise identical.  StaticBudget,
/// EnergyBudget and TdpBudget yield one entry, InstantaneousPower one per
/// segment, AreaEnergy two ("area" then "energy").
std::vector<ConstraintUsage> constraint_usage(const Scenario& s, std::span<const double> x);
std::vector<ConstraintUsage> constraint_usage(const Scenario& s, std::span<const double> area,
                                              std::span<const double> voltage);
std::vector<ConstraintUsage> constraint_usage(const Scenario& s, const Allocation& a);

// AreaEnergy per-segment forms, shared by the solver and the oracle.
double area_voltage_eff(double a, double v);             // 1/(v*sqrt(a))
double area_voltage_energy(double w, double a, double v);  // w*sqrt(a)*v^2

}  // namespace multiamdahl
