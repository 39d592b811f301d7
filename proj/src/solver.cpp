#include "multiamdahl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace multiamdahl::solver {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Positive-weight segment plus its admissible interval.  `flat_lo` marks
// functions that are constant on (0, lo] (clamped hit/predict curves), where
// spending anything is pure waste.
struct Active {
  std::size_t idx;
  double w;
  const EfficiencyFunction* fn;
  double lo;
  double hi;
  bool flat_lo;
};

std::vector<Active> collect_active(const Scenario& s) {
  std::vector<Active> act;
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    const Segment& seg = s.segments[i];
    if (seg.weight == 0.0) continue;
    Active a{i, seg.weight, &seg.efficiency, 0.0, kInf, false};
    std::visit(overloaded{
                   [&](const PowerLaw&) {},
                   [&](const Throughput&) {},
                   [&](const Cache& c) {
                     a.lo = c.hit.flat_below();
                     a.flat_lo = true;
                   },
                   [&](const Branch& b) {
                     a.lo = b.predict.flat_below();
                     a.flat_lo = true;
                   },
                   [&](const Tabulated& t) {
                     a.lo = t.x_min();
                     a.hi = t.x_max();
                   },
               },
               *a.fn);
    act.push_back(std::move(a));
  }
  return act;
}

double marginal(const Active& a, double x) { return a.w * eval_deriv(*a.fn, x); }

// hard interval end or flat region, where stationarity is carried by a bound
// multiplier instead of the shared one
bool at_bound(const Active& a, double x) {
  if (a.flat_lo && x <= a.lo * (1.0 + 1e-9)) return true;
  if (!a.flat_lo && a.lo > 0.0 && x <= a.lo * (1.0 + 1e-12)) return true;
  return std::isfinite(a.hi) && x >= a.hi * (1.0 - 1e-12);
}

double hard_floor(const Active& a) { return (!a.flat_lo && a.lo > 0.0) ? a.lo : 0.0; }

// Invert w * f'(x) = -mu over the segment's admissible interval.  The
// marginal is increasing (convex f), so this is a plain expanding-bracket
// bisection; demands clamp to the interval ends when -mu is outside the
// marginal's range, and drop to an epsilon when even the steepest available
// marginal cannot justify the price (clamped curves).
double invert_marginal(const Active& a, double mu, const SolverConfig& cfg) {
  const double target = -mu;
  double lo, hi;
  if (a.flat_lo) {
    lo = a.lo * (1.0 + 1e-9);
    if (marginal(a, lo) > target) return a.lo * 1e-9;
  } else if (a.lo > 0.0) {
    lo = a.lo;
    if (marginal(a, lo) >= target) return a.lo;
  } else {
    lo = 1.0;
    int guard = 0;
    while (marginal(a, lo) > target && ++guard <= cfg.max_bisect_iters) lo *= 0.5;
  }
  if (std::isfinite(a.hi)) {
    hi = a.hi;
    if (marginal(a, hi) <= target) return a.hi;
  } else {
    hi = std::max(2.0 * lo, 1.0);
    int guard = 0;
    while (marginal(a, hi) < target && ++guard <= cfg.max_bisect_iters) hi *= 2.0;
  }
  for (int it = 0; it < cfg.max_bisect_iters && hi - lo > cfg.multiplier_tol * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (marginal(a, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Allocation scatter(const Scenario& s, const std::vector<Active>& act,
                   const std::vector<double>& xa) {
  Allocation out;
  out.x.assign(s.segments.size(), 0.0);
  for (std::size_t j = 0; j < act.size(); ++j) out.x[act[j].idx] = xa[j];
  return out;
}

bool any_nonconvex(const std::vector<Active>& act) {
  for (const Active& a : act)
    if (!is_convex(*a.fn)) return true;
  return false;
}

const StaticBudget* as_static(const Scenario& s) {
  return std::get_if<StaticBudget>(&s.resource);
}

}  // namespace

Allocation solve_separable(const Scenario& s, const SolverConfig& cfg) {
  const StaticBudget* m = as_static(s);
  if (m == nullptr)
    throw InvalidModelError("solve_separable: resource model must be a single static budget");
  const double X = m->total;
  std::vector<Active> act = collect_active(s);

  double lo_sum = 0.0, hi_sum = 0.0;
  for (const Active& a : act) {
    lo_sum += a.flat_lo ? 0.0 : a.lo;
    hi_sum += a.hi;
  }
  if (lo_sum > X)
    throw InfeasibleError("solve_separable: admissible lower bounds exceed the budget");

  if (hi_sum <= X) {
    // the budget is not binding; every segment caps out
    std::vector<double> xa;
    for (const Active& a : act) xa.push_back(a.hi);
    Allocation out = scatter(s, act, xa);
    out.multipliers = {0.0};
    out.objective_value = weighted_cost(s, out.x);
    out.local_only = any_nonconvex(act);
    out.kkt_residual = 0.0;
    return out;
  }

  std::vector<double> xa(act.size(), 0.0);
  auto total_demand = [&](double mu) {
    double sum = 0.0;
    for (std::size_t j = 0; j < act.size(); ++j) {
      xa[j] = invert_marginal(act[j], mu, cfg);
      sum += xa[j];
    }
    return sum;
  };

  double mu = 0.0;
  if (act.size() == 1) {
    xa[0] = std::min(X, act[0].hi);
    mu = -marginal(act[0], xa[0]);
  } else {
    double probe = X / static_cast<double>(act.size());
    double ref = 0.0;
    for (const Active& a : act) {
      double lo_floor = a.flat_lo ? a.lo * (1.0 + 1e-9) : a.lo;
      double px = std::min(std::max(probe, lo_floor), a.hi);
      if (px <= 0.0) px = probe;
      ref = std::max(ref, -marginal(a, px));
    }
    if (!(ref > 0.0)) ref = 1.0;

    double mu_lo = 1e-6 * ref, mu_hi = 1e6 * ref;
    int guard = 0;
    while (total_demand(mu_lo) < X && ++guard <= cfg.max_bisect_iters) mu_lo *= 0.5;
    guard = 0;
    while (total_demand(mu_hi) > X && ++guard <= cfg.max_bisect_iters) mu_hi *= 2.0;

    std::vector<double> trace;
    double best_res = kInf, best_mu = mu_hi;
    bool converged = false;
    for (int it = 0; it < cfg.max_outer_iters; ++it) {
      mu = 0.5 * (mu_lo + mu_hi);
      double sum = total_demand(mu);
      double res = std::abs(sum - X) / X;
      trace.push_back(res);
      if (res < best_res) {
        best_res = res;
        best_mu = mu;
      }
      if (res <= cfg.budget_tol) {
        converged = true;
        break;
      }
      (sum > X ? mu_lo : mu_hi) = mu;
      if (mu_hi - mu_lo <= 1e-16 * mu_hi) break;
    }
    if (!converged) {
      total_demand(best_mu);
      Allocation best = scatter(s, act, xa);
      best.multipliers = {best_mu};
      if (best_res > cfg.budget_tol)
        throw NonConvergenceError("solve_separable: budget residual " +
                                      std::to_string(best_res) + " after iteration limit",
                                  std::move(best), std::move(trace));
      mu = best_mu;
    }
  }

  // exact exhaustion; only safe when no demand sits on an interval end
  double sum = 0.0;
  bool interior = true;
  for (std::size_t j = 0; j < act.size(); ++j) {
    sum += xa[j];
    if (xa[j] >= act[j].hi || xa[j] <= act[j].lo) interior = false;
  }
  if (interior && sum > 0.0)
    for (double& v : xa) v *= X / sum;

  Allocation out = scatter(s, act, xa);
  out.multipliers = {mu};
  out.objective_value = weighted_cost(s, out.x);
  out.local_only = any_nonconvex(act);
  out.kkt_residual = kkt_residual(s, out);
  return out;
}

Allocation closed_form_two_segment(double t_parallel, double area, const SolverConfig& cfg) {
  if (!(t_parallel > 0.0 && t_parallel < 1.0))
    throw std::domain_error("closed_form_two_segment: t_parallel must lie in (0, 1)");
  if (!(area > 0.0) || !std::isfinite(area))
    throw std::domain_error("closed_form_two_segment: area must be positive");

  const double c = std::sqrt(2.0 * t_parallel / (1.0 - t_parallel));
  double lo = 0.0, hi = area;  // a + c*a^(3/4) - area changes sign on (0, area]
  for (int it = 0; it < cfg.max_bisect_iters && hi - lo > 1e-16 * area; ++it) {
    double mid = 0.5 * (lo + hi);
    (mid + c * std::pow(mid, 0.75) < area ? lo : hi) = mid;
  }
  double a_s = 0.5 * (lo + hi);
  double a_p = area - a_s;

  Allocation out;
  out.x = {a_s, a_p};
  out.objective_value = (1.0 - t_parallel) / std::sqrt(a_s) + t_parallel / a_p;
  out.multipliers = {(1.0 - t_parallel) * 0.5 * std::pow(a_s, -1.5)};
  double d_s = -(1.0 - t_parallel) * 0.5 * std::pow(a_s, -1.5);
  double d_p = -t_parallel / (a_p * a_p);
  out.kkt_residual = std::abs(d_s - d_p) / std::max(std::abs(d_s), std::abs(d_p));
  return out;
}

Allocation closed_form_powerlaw(const Scenario& s, const SolverConfig& cfg) {
  const StaticBudget* m = as_static(s);
  if (m == nullptr)
    throw InvalidModelError("closed_form_powerlaw: resource model must be a static budget");
  std::vector<Active> act = collect_active(s);
  for (const Active& a : act)
    if (!std::holds_alternative<PowerLaw>(*a.fn))
      throw InvalidModelError(
          "closed_form_powerlaw: every positive-weight segment must be a PowerLaw");

  const double X = m->total;
  const PowerLaw& f0 = std::get<PowerLaw>(*act[0].fn);
  const double w0 = act[0].w;

  // a_j expressed through the first segment's allocation
  std::vector<double> expo(act.size()), coef(act.size());
  for (std::size_t j = 0; j < act.size(); ++j) {
    const PowerLaw& fj = std::get<PowerLaw>(*act[j].fn);
    expo[j] = (f0.beta + 1.0) / (fj.beta + 1.0);
    coef[j] = std::pow((f0.alpha / f0.beta) / (fj.alpha / fj.beta) * (act[j].w / w0),
                       1.0 / (fj.beta + 1.0));
  }

  std::vector<double> xa(act.size());
  auto spend = [&](double a0) {
    double sum = 0.0;
    for (std::size_t j = 0; j < act.size(); ++j) {
      xa[j] = std::pow(a0, expo[j]) * coef[j];
      sum += xa[j];
    }
    return sum;
  };

  double lo = 0.0, hi = X;  // spend is increasing and exceeds X at a0 = X
  for (int it = 0; it < cfg.max_bisect_iters && hi - lo > 1e-16 * X; ++it) {
    double mid = 0.5 * (lo + hi);
    (spend(mid) < X ? lo : hi) = mid;
  }
  double a0 = 0.5 * (lo + hi);
  double sum = spend(a0);
  for (double& v : xa) v *= X / sum;

  Allocation out = scatter(s, act, xa);
  out.multipliers = {w0 * f0.beta / (f0.alpha * std::pow(xa[0], f0.beta + 1.0))};
  out.objective_value = weighted_cost(s, out.x);
  out.kkt_residual = kkt_residual(s, out);
  return out;
}

namespace {

// ---- per-segment power caps: x_i + sum_j k_j x_j <= P -------------------
//
// Only the largest x can meet its cap, so the optimum splits the segments
// into a capped set (all at the common value u) and interior ones whose
// marginal gain exactly pays for their static-power externality:
// w_i f_i'(p_i) = -k_i * M with M the sum of the cap multipliers.  M is the
// only unknown; its defining consistency equation is monotone.
Allocation solve_instantaneous(const Scenario& s, const InstantaneousPower& m,
                               const SolverConfig& cfg) {
  std::vector<Active> act = collect_active(s);
  const double P = m.total;
  double shared_floor = 0.0, max_floor = 0.0;
  for (const Active& a : act) {
    shared_floor += m.k[a.idx] * hard_floor(a);
    max_floor = std::max(max_floor, hard_floor(a));
  }
  if (max_floor + shared_floor > P)
    throw InfeasibleError("solve_coupled: admissible lower bounds exceed the power cap");

  // demands are clipped into [floor, u]; a floor above the cap keeps its
  // segment pinned there and only contributes leakage
  std::vector<double> pt(act.size());
  auto fill_interior = [&](double M) {
    for (std::size_t j = 0; j < act.size(); ++j) {
      double kj = m.k[act[j].idx];
      pt[j] = (kj == 0.0 || M == 0.0) ? kInf : invert_marginal(act[j], kj * M, cfg);
    }
  };
  auto x_of = [&](std::size_t j, double u) {
    return std::min(pt[j], std::max(u, hard_floor(act[j])));
  };
  auto cap_for = [&](void) {
    double lo = 0.0, hi = P;
    for (int it = 0; it < cfg.max_bisect_iters && hi - lo > 1e-15 * P; ++it) {
      double u = 0.5 * (lo + hi);
      double lhs = 0.0, big = 0.0;
      for (std::size_t j = 0; j < act.size(); ++j) {
        double xj = x_of(j, u);
        lhs += m.k[act[j].idx] * xj;
        big = std::max(big, xj);
      }
      (big + lhs < P ? lo : hi) = u;
    }
    return 0.5 * (lo + hi);
  };
  auto capped = [&](std::size_t j, double u) {
    return pt[j] >= u && hard_floor(act[j]) <= u;
  };
  auto consistency = [&](double M) {
    fill_interior(M);
    double u = cap_for();
    double sum = 0.0;
    for (std::size_t j = 0; j < act.size(); ++j)
      if (capped(j, u)) sum += -marginal(act[j], u) - m.k[act[j].idx] * M;
    return sum - M;
  };

  double M_lo = 0.0, M_hi = 1.0;
  int guard = 0;
  while (consistency(M_hi) > 0.0 && ++guard <= cfg.max_bisect_iters) M_hi *= 4.0;
  for (int it = 0; it < cfg.max_outer_iters && M_hi - M_lo > 1e-15 * M_hi; ++it) {
    double mid = 0.5 * (M_lo + M_hi);
    (consistency(mid) > 0.0 ? M_lo : M_hi) = mid;
  }
  double M = 0.5 * (M_lo + M_hi);
  fill_interior(M);
  double u = cap_for();

  std::vector<double> xa(act.size());
  for (std::size_t j = 0; j < act.size(); ++j) xa[j] = x_of(j, u);
  Allocation out = scatter(s, act, xa);
  out.multipliers.assign(s.segments.size(), 0.0);
  for (std::size_t j = 0; j < act.size(); ++j)
    if (capped(j, u))
      out.multipliers[act[j].idx] =
          std::max(0.0, -marginal(act[j], u) - m.k[act[j].idx] * M);
  out.objective_value = weighted_cost(s, out.x);
  out.local_only = any_nonconvex(act);
  out.kkt_residual = kkt_residual(s, out);
  return out;
}

// ---- single smooth coupling (energy or TDP) ------------------------------

struct CoupledForm {
  const std::vector<double>* k;
  double budget;
  bool is_energy;
};

double coupled_lhs(const Scenario& s, std::span<const double> x) {
  return constraint_usage(s, x).front().lhs;
}

// d lhs / d p_i with every aggregate evaluated at the current point
double coupled_grad(const Scenario& s, const CoupledForm& f, std::span<const double> x,
                    const Active& a) {
  double K = 0.0, FT = 0.0, FTX = 0.0;
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    K += (*f.k)[i] * x[i];
    if (s.segments[i].weight == 0.0) continue;
    double fv = eval(s.segments[i].efficiency, x[i]);
    FT += s.segments[i].weight * fv;
    FTX += s.segments[i].weight * fv * x[i];
  }
  double ki = (*f.k)[a.idx];
  double fd = a.w * eval_deriv(*a.fn, x[a.idx]);
  double fv = a.w * eval(*a.fn, x[a.idx]);
  if (f.is_energy) return ki * FT + K * fd + fd * x[a.idx] + fv;
  return ki + ((fd * x[a.idx] + fv) * FT - FTX * fd) / (FT * FT);
}

bool energy_blind(const Active& a, double k) {
  // the constraint cannot restrain this segment: its own energy term
  // w*f(p)*p is non-increasing and it draws no static power
  if (k > 0.0) return false;
  if (const auto* p = std::get_if<PowerLaw>(a.fn)) return p->beta >= 1.0;
  return std::holds_alternative<Throughput>(*a.fn);
}

Allocation solve_energy_like(const Scenario& s, const CoupledForm& form,
                             const SolverConfig& cfg) {
  std::vector<Active> act = collect_active(s);
  const double B = form.budget;

  if (form.is_energy) {
    bool all_blind = true, any_blind = false;
    bool all_const = true;
    for (const Active& a : act) {
      bool blind = energy_blind(a, (*form.k)[a.idx]);
      any_blind |= blind;
      all_blind &= blind;
      const auto* p = std::get_if<PowerLaw>(a.fn);
      bool unit_exponent = (p != nullptr && p->beta == 1.0) ||
                           std::holds_alternative<Throughput>(*a.fn);
      all_const &= (*form.k)[a.idx] == 0.0 && unit_exponent;
    }
    if (all_blind && all_const) {
      // allocation-independent constraint: lhs is a constant floor
      double floor = 0.0;
      for (const Active& a : act)
        floor += std::visit(overloaded{
                                [&](const PowerLaw& p) { return a.w / p.alpha; },
                                [&](const Throughput& u) { return a.w * u.t_unit; },
                                [&](const auto&) { return 0.0; },
                            },
                            *a.fn);
      if (floor > B)
        throw InfeasibleError("solve_coupled: allocation-independent energy floor " +
                              std::to_string(floor) + " exceeds the budget");
      std::vector<double> xa(act.size(), 1.0);
      Allocation out = scatter(s, act, xa);
      out.degenerate_constraint = true;
      out.multipliers = {0.0};
      out.objective_value = weighted_cost(s, out.x);
      out.kkt_residual = 0.0;
      return out;
    }
    if (any_blind)
      throw InvalidModelError(
          "solve_coupled: a segment's energy term is non-increasing in its power, so the "
          "constraint cannot bind; no finite optimum exists");
    for (const Active& a : act) {
      bool steep = false;
      if (const auto* p = std::get_if<PowerLaw>(a.fn)) steep = p->beta > 1.0;
      if (const auto* t = std::get_if<Tabulated>(a.fn)) {
        const auto& pts = t->points;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
          double slope = (std::log(pts[i + 1].second) - std::log(pts[i].second)) /
                         (std::log(pts[i + 1].first) - std::log(pts[i].first));
          steep |= -slope > 1.0 + 1e-12;
        }
      }
      if (steep)
        throw InvalidModelError(
            "solve_coupled: segment '" + s.segments[a.idx].name +
            "' has an energy term that falls as its power grows (efficiency exponent above "
            "1); the energy budget cannot be allocated for it");
    }
  }

  // feasibility probe at the smallest admissible point
  std::vector<double> probe(s.segments.size(), 0.0);
  for (const Active& a : act)
    probe[a.idx] = a.lo > 0.0 ? a.lo * (1.0 + 1e-12) : 1e-12;
  if (coupled_lhs(s, probe) > B * (1.0 + 1e-9))
    throw InfeasibleError("solve_coupled: constraint already exceeds the budget at the "
                          "smallest admissible allocation");

  std::vector<double> x(s.segments.size(), 0.0);
  for (const Active& a : act) x[a.idx] = std::clamp(1.0, a.lo * (1.0 + 1e-9), a.hi);

  // coordinate stationarity: psi = w f'(p) + mu * d lhs/d p, increasing in p
  auto coordinate_root = [&](const Active& a, double mu) {
    auto psi = [&](double p) {
      double save = x[a.idx];
      x[a.idx] = p;
      double g = marginal(a, p) + mu * coupled_grad(s, form, x, a);
      x[a.idx] = save;
      return g;
    };
    double lo, hi;
    if (a.flat_lo) {
      lo = a.lo * (1.0 + 1e-9);
      if (psi(lo) > 0.0) return a.lo * 1e-9;
    } else if (a.lo > 0.0) {
      lo = a.lo;
      if (psi(lo) >= 0.0) return a.lo;
    } else {
      lo = std::min(x[a.idx], 1.0);
      int guard = 0;
      while (psi(lo) > 0.0 && ++guard <= cfg.max_bisect_iters) lo *= 0.5;
    }
    if (std::isfinite(a.hi)) {
      hi = a.hi;
      if (psi(hi) <= 0.0) return a.hi;
    } else {
      hi = std::max(2.0 * lo, x[a.idx]);
      int guard = 0;
      while (psi(hi) < 0.0 && ++guard <= cfg.max_bisect_iters) {
        hi *= 2.0;
        if (hi > 1e12 * (1.0 + B)) return hi;
      }
    }
    for (int it = 0; it < cfg.max_bisect_iters && hi - lo > cfg.multiplier_tol * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      (psi(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  auto inner_solve = [&](double mu) {
    for (int sweep = 0; sweep < cfg.max_bisect_iters; ++sweep) {
      double worst = 0.0;
      for (const Active& a : act) {
        double next = coordinate_root(a, mu);
        worst = std::max(worst, std::abs(next - x[a.idx]) / std::max(next, 1e-300));
        x[a.idx] = next;
      }
      if (worst < 1e-13) break;
    }
    return coupled_lhs(s, x);
  };

  // seed the multiplier so both gradient scales match at the start point
  double gscale = 0.0, oscale = 0.0;
  for (const Active& a : act) {
    oscale = std::max(oscale, -marginal(a, x[a.idx]));
    gscale = std::max(gscale, std::abs(coupled_grad(s, form, x, a)));
  }
  double mu0 = oscale / std::max(gscale, 1e-300);
  if (!(mu0 > 0.0) || !std::isfinite(mu0)) mu0 = 1.0;

  double mu_lo = mu0, mu_hi = mu0;
  int guard = 0;
  while (inner_solve(mu_lo) < B && ++guard <= cfg.max_bisect_iters) mu_lo *= 0.25;
  if (guard > cfg.max_bisect_iters) {
    // the budget never binds (capped domains); accept the relaxed optimum
    Allocation out;
    out.x = x;
    out.multipliers = {mu_lo};
    out.objective_value = weighted_cost(s, out.x);
    out.local_only = any_nonconvex(act);
    out.kkt_residual = kkt_residual(s, out);
    return out;
  }
  guard = 0;
  while (inner_solve(mu_hi) > B && ++guard <= cfg.max_bisect_iters) mu_hi *= 4.0;

  std::vector<double> trace;
  double best_res = kInf, best_mu = mu_hi, mu = mu_hi;
  std::vector<double> best_x = x;
  bool converged = false;
  for (int it = 0; it < cfg.max_outer_iters; ++it) {
    mu = 0.5 * (mu_lo + mu_hi);
    double lhs = inner_solve(mu);
    double res = std::abs(lhs - B) / B;
    trace.push_back(res);
    if (res < best_res) {
      best_res = res;
      best_mu = mu;
      best_x = x;
    }
    if (res <= cfg.budget_tol) {
      converged = true;
      break;
    }
    (lhs > B ? mu_lo : mu_hi) = mu;
    if (mu_hi - mu_lo <= 1e-16 * mu_hi) break;
  }
  x = best_x;
  mu = best_mu;

  Allocation out;
  out.x = x;
  out.multipliers = {mu};
  out.objective_value = weighted_cost(s, out.x);
  out.local_only = any_nonconvex(act);
  out.kkt_residual = kkt_residual(s, out);
  if (!converged && best_res > cfg.budget_tol)
    throw NonConvergenceError("solve_coupled: constraint residual " +
                                  std::to_string(best_res) + " after iteration limit",
                              std::move(out), std::move(trace));
  return out;
}

}  // namespace

Allocation solve_coupled(const Scenario& s, const SolverConfig& cfg) {
  if (const auto* m = std::get_if<InstantaneousPower>(&s.resource))
    return solve_instantaneous(s, *m, cfg);
  if (const auto* m = std::get_if<EnergyBudget>(&s.resource))
    return solve_energy_like(s, CoupledForm{&m->k, m->total, true}, cfg);
  if (const auto* m = std::get_if<TdpBudget>(&s.resource))
    return solve_energy_like(s, CoupledForm{&m->k, m->total, false}, cfg);
  throw InvalidModelError("solve_coupled: resource model must couple segments");
}

Allocation solve_area_voltage(const Scenario& s, const SolverConfig& cfg) {
  const auto* m = std::get_if<AreaEnergy>(&s.resource);
  if (m == nullptr)
    throw InvalidModelError("solve_area_voltage: resource model must be AreaEnergy");
  std::vector<Active> act = collect_active(s);
  const double A = m->area_total, E = m->energy_total;
  const std::size_t n = act.size();

  std::vector<double> area(n), volt(n);

  // stationarity in a given both multipliers: lambda = (w/4)(2 mu)^(1/3) a^(-7/6)
  auto area_root = [&](double w, double lambda, double mu) {
    double rhs = 0.25 * w * std::cbrt(2.0 * mu);
    double lo = A * 1e-12, hi = A;
    int guard = 0;
    while (rhs * std::pow(hi, -7.0 / 6.0) > lambda && ++guard <= cfg.max_bisect_iters)
      hi *= 2.0;
    guard = 0;
    while (rhs * std::pow(lo, -7.0 / 6.0) < lambda && ++guard <= cfg.max_bisect_iters)
      lo *= 0.5;
    for (int it = 0; it < cfg.max_bisect_iters && hi - lo > cfg.multiplier_tol * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      (rhs * std::pow(mid, -7.0 / 6.0) > lambda ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  auto areas_for = [&](double mu) {
    // nested bisection on the area multiplier
    double mid_a = A / static_cast<double>(n);
    double l0 = 0.25 * act[0].w * std::cbrt(2.0 * mu) * std::pow(mid_a, -7.0 / 6.0);
    double lam_lo = l0, lam_hi = l0;
    auto total = [&](double lam) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        area[j] = area_root(act[j].w, lam, mu);
        sum += area[j];
      }
      return sum;
    };
    int guard = 0;
    while (total(lam_lo) < A && ++guard <= cfg.max_bisect_iters) lam_lo *= 0.5;
    guard = 0;
    while (total(lam_hi) > A && ++guard <= cfg.max_bisect_iters) lam_hi *= 2.0;
    double lam = lam_hi;
    for (int it = 0; it < cfg.max_outer_iters; ++it) {
      lam = 0.5 * (lam_lo + lam_hi);
      double sum = total(lam);
      if (std::abs(sum - A) <= cfg.budget_tol * A) break;
      (sum > A ? lam_lo : lam_hi) = lam;
    }
    double sum = 0.0;
    for (double a : area) sum += a;
    for (double& a : area) a *= A / sum;
    return lam;
  };

  auto energy_used = [&]() {
    double e = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      e += area_voltage_energy(act[j].w, area[j], volt[j]);
    return e;
  };
  auto voltages_for = [&](double mu) {
    for (std::size_t j = 0; j < n; ++j) volt[j] = std::cbrt(1.0 / (2.0 * mu * area[j]));
  };

  double mu_lo = 1.0, mu_hi = 1.0, lambda = 0.0;
  auto usage = [&](double mu) {
    lambda = areas_for(mu);
    voltages_for(mu);
    return energy_used();
  };
  int guard = 0;
  while (usage(mu_lo) < E && ++guard <= cfg.max_bisect_iters) mu_lo *= 0.25;
  guard = 0;
  while (usage(mu_hi) > E && ++guard <= cfg.max_bisect_iters) mu_hi *= 4.0;
  double mu = mu_hi;
  for (int it = 0; it < cfg.max_outer_iters; ++it) {
    mu = 0.5 * (mu_lo + mu_hi);
    double e = usage(mu);
    if (std::abs(e - E) <= cfg.budget_tol * E) break;
    (e > E ? mu_lo : mu_hi) = mu;
  }
  usage(mu);
  double scale = std::sqrt(E / energy_used());
  for (double& v : volt) v *= scale;  // exact energy exhaustion

  Allocation out;
  out.x.assign(s.segments.size(), 0.0);
  out.voltage.assign(s.segments.size(), 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    out.x[act[j].idx] = area[j];
    out.voltage[act[j].idx] = volt[j];
  }
  out.multipliers = {lambda, mu};
  out.objective_value = weighted_cost(s, out.x, out.voltage);
  out.kkt_residual = kkt_residual(s, out);
  return out;
}

Allocation solve(const Scenario& s, const SolverConfig& cfg) {
  return std::visit(
      overloaded{
          [&](const StaticBudget&) { return solve_separable(s, cfg); },
          [&](const InstantaneousPower&) { return solve_coupled(s, cfg); },
          [&](const EnergyBudget&) { return solve_coupled(s, cfg); },
          [&](const TdpBudget&) { return solve_coupled(s, cfg); },
          [&](const AreaEnergy&) { return solve_area_voltage(s, cfg); },
      },
      s.resource);
}

double kkt_residual(const Scenario& s, const Allocation& al) {
  if (al.degenerate_constraint) return 0.0;
  std::vector<Active> act = collect_active(s);

  if (std::holds_alternative<StaticBudget>(s.resource)) {
    double dmin = kInf, dmax = -kInf, scale = 0.0;
    std::size_t counted = 0;
    for (const Active& a : act) {
      if (at_bound(a, al.x[a.idx])) continue;
      double d = marginal(a, al.x[a.idx]);
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
      scale = std::max(scale, std::abs(d));
      ++counted;
    }
    if (counted < 2 || scale == 0.0) return 0.0;
    return (dmax - dmin) / scale;
  }

  if (const auto* m = std::get_if<AreaEnergy>(&s.resource)) {
    (void)m;
    if (al.multipliers.size() != 2)
      throw std::invalid_argument("kkt_residual: AreaEnergy allocation needs two multipliers");
    double lambda = al.multipliers[0], mu = al.multipliers[1];
    double worst = 0.0, scale = 0.0;
    for (const Active& a : act) {
      double ai = al.x[a.idx], vi = al.voltage[a.idx];
      double to_a = -a.w / (2.0 * vi * std::pow(ai, 1.5));
      double to_v = -a.w / (vi * vi * std::sqrt(ai));
      double ga = to_a + lambda + mu * a.w * vi * vi / (2.0 * std::sqrt(ai));
      double gv = to_v + mu * 2.0 * a.w * std::sqrt(ai) * vi;
      worst = std::max({worst, std::abs(ga), std::abs(gv)});
      scale = std::max({scale, std::abs(to_a), std::abs(to_v)});
    }
    return scale == 0.0 ? 0.0 : worst / scale;
  }

  if (const auto* m = std::get_if<InstantaneousPower>(&s.resource)) {
    if (al.multipliers.size() != s.segments.size())
      throw std::invalid_argument(
          "kkt_residual: InstantaneousPower needs one multiplier per segment");
    double M = 0.0;
    for (double v : al.multipliers) M += v;
    double worst = 0.0, scale = 0.0;
    for (const Active& a : act) {
      if (at_bound(a, al.x[a.idx])) continue;
      double d = marginal(a, al.x[a.idx]);
      double g = d + al.multipliers[a.idx] + m->k[a.idx] * M;
      worst = std::max(worst, std::abs(g));
      scale = std::max(scale, std::abs(d));
    }
    return scale == 0.0 ? 0.0 : worst / scale;
  }

  CoupledForm form{};
  if (const auto* m = std::get_if<EnergyBudget>(&s.resource))
    form = CoupledForm{&m->k, m->total, true};
  else if (const auto* m = std::get_if<TdpBudget>(&s.resource))
    form = CoupledForm{&m->k, m->total, false};
  if (al.multipliers.size() != 1)
    throw std::invalid_argument("kkt_residual: coupled allocation needs one multiplier");
  double mu = al.multipliers[0];
  double worst = 0.0, scale = 0.0;
  for (const Active& a : act) {
    if (at_bound(a, al.x[a.idx])) continue;
    double d = marginal(a, al.x[a.idx]);
    double g = d + mu * coupled_grad(s, form, al.x, a);
    worst = std::max(worst, std::abs(g));
    scale = std::max(scale, std::abs(d));
  }
  return scale == 0.0 ? 0.0 : worst / scale;
}

}  // namespace multiamdahl::solver
