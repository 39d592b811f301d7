#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "helpers.hpp"
#include "multiamdahl/model.hpp"
#include "multiamdahl/oracle.hpp"
#include "multiamdahl/solver.hpp"

using namespace multiamdahl;
using testutil::bisect;
using testutil::rel_diff;

namespace {

double budget_residual(const Scenario& s, const Allocation& a) {
  double worst = 0.0;
  for (const auto& u : constraint_usage(s, a)) worst = std::max(worst, (u.lhs - u.budget) / u.budget);
  return worst;
}

double binding_gap(const Scenario& s, const Allocation& a, std::size_t which = 0) {
  auto u = constraint_usage(s, a)[which];
  return std::fabs(u.lhs - u.budget) / u.budget;
}

}  // namespace

TEST_CASE("single segment gets the whole budget") {
  Scenario s({{"only", 1.0, PowerLaw{2.0, 0.7}}}, StaticBudget{12.0}, Objective::total_time);
  Allocation a = solver::solve_separable(s);
  CHECK(a.x[0] == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(a.objective_value == doctest::Approx(eval(s.segments[0].efficiency, 12.0)).epsilon(1e-12));
  CHECK(a.kkt_residual <= 1e-7);
}

TEST_CASE("symmetric segments split the budget evenly") {
  Scenario s({{"a", 0.5, PowerLaw{1.0, 1.0}}, {"b", 0.5, PowerLaw{1.0, 1.0}}},
             StaticBudget{8.0}, Objective::total_time);
  Allocation a = solver::solve_separable(s);
  CHECK(a.x[0] == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(a.x[1] == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(a.objective_value == doctest::Approx(0.25).epsilon(1e-9));
  REQUIRE(a.multipliers.size() == 1);
  // -w f'(4) = 0.5 / 16
  CHECK(a.multipliers[0] == doctest::Approx(0.03125).epsilon(1e-6));
  CHECK(a.kkt_residual <= 1e-7);
}

TEST_CASE("two-segment optimum matches an independent bisection") {
  // serial sqrt-scaling core plus linear parallel fabric, equal time shares;
  // the optimality condition reduces to a_p = sqrt(2) * a_s^(3/4)
  const double A = 16.0;
  Scenario s({{"serial", 0.5, PowerLaw{1.0, 0.5}}, {"parallel", 0.5, PowerLaw{1.0, 1.0}}},
             StaticBudget{A}, Objective::total_time);
  double c = std::sqrt(2.0);
  double a_s_ref = bisect([&](double v) { return v + c * std::pow(v, 0.75) - A; }, 1e-12, A);

  Allocation a = solver::solve_separable(s);
  CHECK(rel_diff(a.x[0], a_s_ref) <= 1e-9);
  CHECK(rel_diff(a.x[1], A - a_s_ref) <= 1e-9);

  Allocation cf = solver::closed_form_two_segment(0.5, A);
  CHECK(rel_diff(cf.x[0], a_s_ref) <= 1e-12);
  CHECK(rel_diff(cf.x[0] + cf.x[1], A) <= 1e-12);
}

TEST_CASE("random power-law suite satisfies stationarity and exhausts the budget") {
  std::mt19937_64 rng(20240817);
  std::uniform_int_distribution<std::size_t> n_dist(2, 8);
  for (int trial = 0; trial < 100; ++trial) {
    Scenario s = testutil::random_powerlaw_scenario(rng, n_dist(rng));
    Allocation a = solver::solve_separable(s);
    CAPTURE(trial);
    CHECK(a.kkt_residual <= 1e-7);
    CHECK(binding_gap(s, a) <= 1e-9);
    CHECK(solver::kkt_residual(s, a) <= 1e-7);
  }
}

TEST_CASE("solver dominates a fine grid on small static scenarios") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 8; ++trial) {
    Scenario s = testutil::random_powerlaw_scenario(rng, trial % 2 == 0 ? 2 : 3, 4.0, 64.0);
    Allocation a = solver::solve_separable(s);
    Allocation g = oracle::grid_search(s, oracle::default_grid_spec(s, 200));
    CAPTURE(trial);
    CHECK(a.objective_value <= g.objective_value + 1e-9);
    double budget = std::get<StaticBudget>(s.resource).total;
    CHECK(oracle::perturbation_check(s, a, 1e-4 * budget));
  }
}

TEST_CASE("mixed cache and power-law scenario verified against the grid") {
  Scenario s({{"cache", 0.6, Cache{SaturatingCurve{0.5, 1.0}, 1.0, 10.0}},
              {"compute", 0.4, PowerLaw{1.0, 1.0}}},
             StaticBudget{12.0}, Objective::average_latency);
  Allocation a = solver::solve_separable(s);
  Allocation g = oracle::grid_search(s, oracle::default_grid_spec(s, 4001));
  CHECK(a.objective_value <= g.objective_value + 1e-9);
  CHECK(rel_diff(a.objective_value, g.objective_value) <= 1e-3);
  CHECK(a.kkt_residual <= 1e-7);
  CHECK(oracle::perturbation_check(s, a, 1.2e-3));
}

TEST_CASE("tabulated caps are honored and excess budget leaves a zero multiplier") {
  Scenario s({{"a", 0.5, Tabulated{{{1.0, 1.0}, {2.0, 0.5}, {4.0, 0.3}}}},
              {"b", 0.5, Tabulated{{{1.0, 2.0}, {8.0, 0.9}}}}},
             StaticBudget{100.0}, Objective::total_time);
  Allocation a = solver::solve_separable(s);
  CHECK(a.x[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(a.x[1] == doctest::Approx(8.0).epsilon(1e-12));
  REQUIRE(a.multipliers.size() == 1);
  CHECK(a.multipliers[0] == 0.0);
  CHECK(a.kkt_residual == 0.0);
}

TEST_CASE("tabulated floors below the budget are infeasible") {
  Scenario s({{"a", 0.5, Tabulated{{{4.0, 1.0}, {8.0, 0.5}}}},
              {"b", 0.5, Tabulated{{{4.0, 2.0}, {8.0, 1.5}}}}},
             StaticBudget{6.0}, Objective::total_time);
  CHECK_THROWS_AS(solver::solve_separable(s), InfeasibleError);
}

TEST_CASE("non-convex tabulated input is solved but flagged local-only") {
  Scenario s({{"odd", 0.5, Tabulated{{{1.0, 1.0}, {2.0, 0.9}, {4.0, 0.2}, {8.0, 0.19}}}},
              {"plain", 0.5, PowerLaw{1.0, 1.0}}},
             StaticBudget{10.0}, Objective::total_time);
  Allocation a = solver::solve_separable(s);
  CHECK(a.local_only);
  CHECK(binding_gap(s, a) <= 1e-9);
}

TEST_CASE("flat branch regions can make water-filling report non-convergence") {
  // both curves are flat below x = 0.5, so total demand jumps from ~0 to
  // above 1.0 as the price falls; a budget of 0.6 sits inside the jump
  Scenario s({{"b1", 0.5, Branch{SaturatingCurve{0.5, 1.0}, 10.0}},
              {"b2", 0.5, Branch{SaturatingCurve{0.5, 1.0}, 10.0}}},
             StaticBudget{0.6}, Objective::total_time);
  try {
    solver::solve_separable(s);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(!e.residual_trace.empty());
    CHECK(e.best.x.size() == 2);
    // the carried iterate is the one with the smallest budget residual, which
    // in this scenario is the overshooting side of the jump
    double sum = e.best.x[0] + e.best.x[1];
    double res = std::fabs(sum - 0.6) / 0.6;
    CHECK(res > 1e-9);
    double lowest = *std::min_element(e.residual_trace.begin(), e.residual_trace.end());
    CHECK(res == doctest::Approx(lowest).epsilon(1e-9));
  }
}

TEST_CASE("iteration caps surface as non-convergence with the best iterate") {
  std::mt19937_64 rng(5);
  Scenario s = testutil::random_powerlaw_scenario(rng, 4);
  solver::SolverConfig tight;
  tight.max_bisect_iters = 3;
  tight.budget_tol = 1e-12;
  CHECK_THROWS_AS(solver::solve_separable(s, tight), NonConvergenceError);
}

TEST_CASE("closed form two-segment validates its domain") {
  CHECK_THROWS_AS(solver::closed_form_two_segment(0.0, 16.0), std::domain_error);
  CHECK_THROWS_AS(solver::closed_form_two_segment(1.0, 16.0), std::domain_error);
  CHECK_THROWS_AS(solver::closed_form_two_segment(0.5, 0.0), std::domain_error);
}

TEST_CASE("closed form two-segment satisfies its defining relation") {
  for (double t : {0.05, 0.2, 0.5, 0.8, 0.95}) {
    for (double A : {4.0, 16.0, 64.0, 256.0}) {
      Allocation a = solver::closed_form_two_segment(t, A);
      CAPTURE(t);
      CAPTURE(A);
      double c = std::sqrt(2.0 * t / (1.0 - t));
      CHECK(rel_diff(a.x[1], c * std::pow(a.x[0], 0.75)) <= 1e-9);
      CHECK(rel_diff(a.x[0] + a.x[1], A) <= 1e-12);

      Scenario s({{"serial", 1.0 - t, PowerLaw{1.0, 0.5}}, {"parallel", t, PowerLaw{1.0, 1.0}}},
                 StaticBudget{A}, Objective::total_time);
      Allocation n = solver::solve_separable(s);
      CHECK(rel_diff(a.x[0], n.x[0]) <= 1e-6);
      CHECK(rel_diff(a.x[1], n.x[1]) <= 1e-6);
    }
  }
}

TEST_CASE("closed form power law requires the right model shape") {
  Scenario tab({{"a", 0.5, Tabulated{{{1.0, 1.0}, {2.0, 0.5}}}}, {"b", 0.5, PowerLaw{1.0, 1.0}}},
               StaticBudget{4.0}, Objective::total_time);
  CHECK_THROWS_AS(solver::closed_form_powerlaw(tab), InvalidModelError);
  Scenario energy({{"a", 0.5, PowerLaw{1.0, 0.5}}, {"b", 0.5, PowerLaw{1.0, 1.0}}},
                  EnergyBudget{4.0, {0.1, 0.1}}, Objective::total_time);
  CHECK_THROWS_AS(solver::closed_form_powerlaw(energy), InvalidModelError);
}

TEST_CASE("closed form power law matches the iterative solver") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> n_dist(2, 6);
  for (int trial = 0; trial < 30; ++trial) {
    Scenario s = testutil::random_powerlaw_scenario(rng, n_dist(rng));
    Allocation cf = solver::closed_form_powerlaw(s);
    Allocation it = solver::solve_separable(s);
    CAPTURE(trial);
    CHECK(rel_diff(cf.objective_value, it.objective_value) <= 1e-8);
    for (std::size_t i = 0; i < cf.x.size(); ++i) CHECK(rel_diff(cf.x[i], it.x[i]) <= 1e-6);
    CHECK(binding_gap(s, cf) <= 1e-9);
  }
}

TEST_CASE("closed form power law satisfies the pairwise allocation identity") {
  Scenario s({{"s0", 0.4, PowerLaw{1.0, 1.0}},
              {"s1", 0.3, PowerLaw{30.0, 1.0}},
              {"s2", 0.2, PowerLaw{100.0, 0.5}},
              {"s3", 0.1, PowerLaw{256.0, 0.8}}},
             StaticBudget{16.0}, Objective::total_time);
  Allocation a = solver::closed_form_powerlaw(s);
  const auto& p0 = std::get<PowerLaw>(s.segments[0].efficiency);
  double w0 = s.segments[0].weight;
  for (std::size_t i = 1; i < s.segments.size(); ++i) {
    const auto& pi = std::get<PowerLaw>(s.segments[i].efficiency);
    double wi = s.segments[i].weight;
    double expected = std::pow(a.x[0], (p0.beta + 1.0) / (pi.beta + 1.0)) *
                      std::pow((p0.alpha / p0.beta) / (pi.alpha / pi.beta) * wi / w0,
                               1.0 / (pi.beta + 1.0));
    CAPTURE(i);
    CHECK(rel_diff(a.x[i], expected) <= 1e-10);
  }
}

TEST_CASE("per-segment power caps without leakage saturate every cap") {
  Scenario s({{"a", 0.5, PowerLaw{1.0, 1.0}}, {"b", 0.5, PowerLaw{1.0, 1.0}}},
             InstantaneousPower{3.0, {0.0, 0.0}}, Objective::total_time);
  Allocation a = solver::solve_coupled(s);
  CHECK(a.x[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(a.x[1] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(a.kkt_residual <= 1e-7);
}

TEST_CASE("symmetric leakage shrinks the common power cap") {
  // u + 0.25*(u + u) = 1.5u = 3  =>  u = 2
  Scenario s({{"a", 0.5, PowerLaw{1.0, 1.0}}, {"b", 0.5, PowerLaw{1.0, 1.0}}},
             InstantaneousPower{3.0, {0.25, 0.25}}, Objective::total_time);
  Allocation a = solver::solve_coupled(s);
  CHECK(a.x[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(a.x[1] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(budget_residual(s, a) <= 1e-9);
  CHECK(a.kkt_residual <= 1e-7);
}

TEST_CASE("asymmetric instantaneous power verified against the grid") {
  Scenario s({{"hot", 0.7, PowerLaw{1.0, 0.8}}, {"cold", 0.3, PowerLaw{4.0, 1.2}}},
             InstantaneousPower{5.0, {0.5, 0.1}}, Objective::total_time);
  Allocation a = solver::solve_coupled(s);
  CHECK(budget_residual(s, a) <= 1e-9);
  CHECK(a.kkt_residual <= 1e-7);
  Allocation g = oracle::grid_search(s, oracle::default_grid_spec(s, 400));
  CHECK(a.objective_value <= g.objective_value + 1e-9);
  CHECK(rel_diff(a.objective_value, g.objective_value) <= 5e-3);
  CHECK(oracle::perturbation_check(s, a, 5e-4));
}

TEST_CASE("infeasible power floors are reported") {
  // leakage alone exceeds the cap for any positive allocation is impossible,
  // but a tabulated floor can push past it
  Scenario s({{"a", 0.5, Tabulated{{{8.0, 1.0}, {16.0, 0.5}}}}, {"b", 0.5, PowerLaw{1.0, 1.0}}},
             InstantaneousPower{4.0, {0.5, 0.5}}, Objective::total_time);
  CHECK_THROWS_AS(solver::solve_coupled(s), InfeasibleError);
}

TEST_CASE("energy budget solve binds the constraint and is grid-confirmed") {
  Scenario s({{"a", 0.6, PowerLaw{1.0, 0.6}}, {"b", 0.4, PowerLaw{2.0, 0.8}}},
             EnergyBudget{6.0, {0.3, 0.2}}, Objective::total_time);
  Allocation a = solver::solve_coupled(s);
  CHECK(binding_gap(s, a) <= 1e-9);
  CHECK(a.kkt_residual <= 1e-7);
  Allocation g = oracle::grid_search(s, oracle::default_grid_spec(s, 400));
  CHECK(a.objective_value <= g.objective_value + 1e-9);
  CHECK(rel_diff(a.objective_value, g.objective_value) <= 5e-3);
  CHECK(oracle::perturbation_check(s, a, 6e-4));
}

TEST_CASE("tdp budget solve binds the constraint and is grid-confirmed") {
  Scenario s({{"a", 0.6, PowerLaw{1.0, 0.6}}, {"b", 0.4, PowerLaw{2.0, 1.3}}},
             TdpBudget{4.0, {0.2, 0.3}}, Objective::total_time);
  Allocation a = solver::solve_coupled(s);
  CHECK(binding_gap(s, a) <= 1e-9);
  CHECK(a.kkt_residual <= 1e-7);
  Allocation g = oracle::grid_search(s, oracle::default_grid_spec(s, 400));
  CHECK(a.objective_value <= g.objective_value + 1e-9);
  CHECK(rel_diff(a.objective_value, g.objective_value) <= 5e-3);
  CHECK(oracle::perturbation_check(s, a, 4e-4));
}

TEST_CASE("energy constraints that cannot bind are rejected or flagged") {
  // beta = 1 with zero leakage makes the energy use allocation-independent
  Scenario flat({{"a", 0.5, PowerLaw{1.0, 1.0}}, {"b", 0.5, PowerLaw{4.0, 1.0}}},
                EnergyBudget{2.0, {0.0, 0.0}}, Objective::total_time);
  Allocation a = solver::solve_coupled(flat);
  CHECK(a.degenerate_constraint);
  CHECK(a.kkt_residual == 0.0);
  // energy use is w1/alpha1 + w2/alpha2 = 0.5 + 0.125 regardless of x
  CHECK(constraint_usage(flat, a)[0].lhs == doctest::Approx(0.625).epsilon(1e-12));

  Scenario floor_too_high({{"a", 0.5, PowerLaw{1.0, 1.0}}, {"b", 0.5, PowerLaw{4.0, 1.0}}},
                          EnergyBudget{0.5, {0.0, 0.0}}, Objective::total_time);
  CHECK_THROWS_AS(solver::solve_coupled(floor_too_high), InfeasibleError);

  // one segment blind to the budget while another is not: no finite optimum
  Scenario mixed({{"a", 0.5, PowerLaw{1.0, 1.0}}, {"b", 0.5, PowerLaw{1.0, 0.7}}},
                 EnergyBudget{2.0, {0.0, 0.2}}, Objective::total_time);
  CHECK_THROWS_AS(solver::solve_coupled(mixed), InvalidModelError);

  // superlinear scaling with zero leakage shrinks energy while improving time
  Scenario runaway({{"a", 0.5, PowerLaw{1.0, 1.3}}, {"b", 0.5, PowerLaw{1.0, 1.2}}},
                   EnergyBudget{2.0, {0.0, 0.0}}, Objective::total_time);
  CHECK_THROWS_AS(solver::solve_coupled(runaway), InvalidModelError);
}

TEST_CASE("area and voltage split follows the analytic weight powers") {
  Scenario s({{"heavy", 0.8, PowerLaw{1.0, 1.0}}, {"light", 0.2, PowerLaw{1.0, 1.0}}},
             AreaEnergy{16.0, 4.0}, Objective::total_time);
  Allocation a = solver::solve_area_voltage(s);
  REQUIRE(a.x.size() == 2);
  REQUIRE(a.voltage.size() == 2);
  // stationarity in the areas gives a_i proportional to w_i^(6/7)
  CHECK(rel_diff(a.x[0] / a.x[1], std::pow(4.0, 6.0 / 7.0)) <= 1e-6);
  // optimal voltage scales as a^(-1/3)
  CHECK(rel_diff(a.voltage[0] / a.voltage[1], std::pow(a.x[1] / a.x[0], 1.0 / 3.0)) <= 1e-6);
  for (const auto& u : constraint_usage(s, a)) CHECK(std::fabs(u.lhs - u.budget) / u.budget <= 1e-9);
  CHECK(a.kkt_residual <= 1e-7);
  CHECK(oracle::perturbation_check(s, a, 1e-4 * 16.0));
}

TEST_CASE("symmetric area-energy problems have a closed answer") {
  Scenario s({{"a", 0.5, PowerLaw{1.0, 1.0}}, {"b", 0.5, PowerLaw{1.0, 1.0}}},
             AreaEnergy{16.0, 4.0}, Objective::total_time);
  Allocation a = solver::solve_area_voltage(s);
  CHECK(a.x[0] == doctest::Approx(8.0).epsilon(1e-8));
  CHECK(a.x[1] == doctest::Approx(8.0).epsilon(1e-8));
  double v = std::sqrt(4.0 / std::sqrt(8.0));
  CHECK(a.voltage[0] == doctest::Approx(v).epsilon(1e-8));
  double expected_T = 2.0 * 0.5 / (v * std::sqrt(8.0));
  CHECK(a.objective_value == doctest::Approx(expected_T).epsilon(1e-8));
  REQUIRE(a.multipliers.size() == 2);
}

TEST_CASE("solve dispatches on the resource model") {
  Scenario st({{"a", 1.0, PowerLaw{1.0, 1.0}}}, StaticBudget{4.0}, Objective::total_time);
  CHECK(solver::solve(st).x[0] == doctest::Approx(4.0));
  Scenario ae({{"a", 1.0, PowerLaw{1.0, 1.0}}}, AreaEnergy{4.0, 2.0}, Objective::total_time);
  Allocation v = solver::solve(ae);
  CHECK(v.voltage.size() == 1);
  Scenario en({{"a", 0.6, PowerLaw{1.0, 0.6}}, {"b", 0.4, PowerLaw{2.0, 0.8}}},
              EnergyBudget{6.0, {0.3, 0.2}}, Objective::total_time);
  CHECK(solver::solve(en).kkt_residual <= 1e-7);
}

TEST_CASE("kkt residual measures pairwise marginal spread") {
  Scenario s({{"a", 0.5, PowerLaw{1.0, 1.0}}, {"b", 0.5, PowerLaw{1.0, 1.0}}},
             StaticBudget{8.0}, Objective::total_time);
  Allocation even;
  even.x = {4.0, 4.0};
  CHECK(solver::kkt_residual(s, even) == doctest::Approx(0.0).epsilon(1e-15));
  Allocation skew;
  skew.x = {2.0, 6.0};
  // derivatives -0.5/4 and -0.5/36: spread/scale = (1/8 - 1/72)/(1/8)
  CHECK(solver::kkt_residual(s, skew) == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("repeated solves are bitwise identical") {
  std::mt19937_64 rng(2026);
  Scenario s = testutil::random_powerlaw_scenario(rng, 5);
  Allocation a = solver::solve_separable(s);
  Allocation b = solver::solve_separable(s);
  REQUIRE(a.x.size() == b.x.size());
  for (std::size_t i = 0; i < a.x.size(); ++i) CHECK(a.x[i] == b.x[i]);
  CHECK(a.objective_value == b.objective_value);
  CHECK(a.multipliers[0] == b.multipliers[0]);
}

TEST_CASE("zero-weight segments receive nothing") {
  Scenario s({{"live", 0.7, PowerLaw{1.0, 1.0}},
              {"idle", 0.0, PowerLaw{1.0, 1.0}},
              {"busy", 0.3, PowerLaw{1.0, 0.5}}},
             StaticBudget{9.0}, Objective::total_time);
  Allocation a = solver::solve_separable(s);
  CHECK(a.x[1] == 0.0);
  CHECK(a.x[0] + a.x[2] == doctest::Approx(9.0).epsilon(1e-9));
  CHECK(a.kkt_residual <= 1e-7);
}

TEST_CASE("separable solver rejects coupled resource models") {
  Scenario s({{"a", 1.0, PowerLaw{1.0, 1.0}}}, EnergyBudget{4.0, {0.5}}, Objective::total_time);
  CHECK_THROWS_AS(solver::solve_separable(s), InvalidModelError);
}
