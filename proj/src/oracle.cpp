#include "multiamdahl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "multiamdahl/solver.hpp"

namespace multiamdahl::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSlack = 1e-9;  // relative constraint slack for filtering

std::vector<std::size_t> active_indices(const Scenario& s) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < s.segments.size(); ++i)
    if (s.segments[i].weight > 0.0) idx.push_back(i);
  return idx;
}

bool in_domain(const EfficiencyFunction& f, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) return false;
  if (const auto* t = std::get_if<Tabulated>(&f)) return x >= t->x_min() && x <= t->x_max();
  return true;
}

bool within(const std::vector<ConstraintUsage>& usage) {
  for (const auto& u : usage)
    if (u.lhs > u.budget * (1.0 + kSlack)) return false;
  return true;
}

struct Box {
  std::vector<std::vector<double>> axes;  // one value list per free dimension
  std::size_t points() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.size();
    return n;
  }
};

Box make_box(const GridSpec& grid, std::size_t dims) {
  if (grid.resolution < 2) throw std::invalid_argument("grid_search: resolution must be >= 2");
  if (dims > 4)
    throw std::invalid_argument("grid_search: more than 4 free dimensions is not tractable");
  if (grid.bounds.size() != dims)
    throw std::invalid_argument("grid_search: bounds must match the free-dimension count");
  Box box;
  for (auto [lo, hi] : grid.bounds) {
    if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi))
      throw std::invalid_argument("grid_search: bounds must satisfy 0 < low < high");
    std::vector<double> axis(grid.resolution);
    for (int i = 0; i < grid.resolution; ++i)
      axis[i] = lo + (hi - lo) * static_cast<double>(i) / (grid.resolution - 1);
    box.axes.push_back(std::move(axis));
  }
  return box;
}

// odometer over the box; returns false when the counter wraps
bool advance(std::vector<std::size_t>& c, const Box& box) {
  for (std::size_t d = c.size(); d-- > 0;) {
    if (++c[d] < box.axes[d].size()) return true;
    c[d] = 0;
  }
  return false;
}

}  // namespace

std::size_t free_dimensions(const Scenario& s) {
  std::size_t n = active_indices(s).size();
  if (std::holds_alternative<StaticBudget>(s.resource)) return n - 1;
  if (std::holds_alternative<AreaEnergy>(s.resource)) return 2 * n - 1;
  return n;
}

Allocation grid_search(const Scenario& s, const GridSpec& grid) {
  const auto act = active_indices(s);
  const std::size_t n = act.size();
  const std::size_t dims = free_dimensions(s);
  Box box = make_box(grid, dims);

  const bool is_static = std::holds_alternative<StaticBudget>(s.resource);
  const bool is_area = std::holds_alternative<AreaEnergy>(s.resource);
  double remainder_total = 0.0;
  if (is_static) remainder_total = std::get<StaticBudget>(s.resource).total;
  if (is_area) remainder_total = std::get<AreaEnergy>(s.resource).area_total;

  std::vector<double> x(s.segments.size(), 0.0);
  std::vector<double> v(s.segments.size(), 0.0);
  std::vector<std::size_t> c(dims, 0);

  Allocation best;
  best.objective_value = kInf;
  bool found = false;

  do {
    if (is_area) {
      double sum = 0.0;
      for (std::size_t j = 0; j + 1 < n; ++j) {
        x[act[j]] = box.axes[j][c[j]];
        sum += x[act[j]];
      }
      double last = remainder_total - sum;
      if (!(last > 0.0)) continue;
      x[act[n - 1]] = last;
      for (std::size_t j = 0; j < n; ++j) v[act[j]] = box.axes[n - 1 + j][c[n - 1 + j]];
      if (!within(constraint_usage(s, x, v))) continue;
      double obj = weighted_cost(s, x, v);
      if (obj < best.objective_value) {
        best.objective_value = obj;
        best.x = x;
        best.voltage = v;
        found = true;
      }
    } else {
      bool ok = true;
      double sum = 0.0;
      for (std::size_t j = 0; j < dims; ++j) {
        x[act[j]] = box.axes[j][c[j]];
        sum += x[act[j]];
      }
      if (is_static) {
        double last = n == 1 ? remainder_total : remainder_total - sum;
        if (!(last > 0.0) || !in_domain(s.segments[act[n - 1]].efficiency, last)) continue;
        x[act[n - 1]] = last;
      }
      for (std::size_t j = 0; ok && j < n; ++j)
        ok = in_domain(s.segments[act[j]].efficiency, x[act[j]]);
      if (!ok || !within(constraint_usage(s, x))) continue;
      double obj = weighted_cost(s, x);
      if (obj < best.objective_value) {
        best.objective_value = obj;
        best.x = x;
        found = true;
      }
    }
  } while (advance(c, box));

  if (!found) throw InfeasibleError("grid_search: no grid point satisfies the constraints");
  if (is_static)
    best.kkt_residual = solver::kkt_residual(s, best);
  else
    best.kkt_residual = kInf;  // not certified; multipliers are unknown
  return best;
}

GridSpec default_grid_spec(const Scenario& s, int resolution) {
  const auto act = active_indices(s);
  GridSpec grid;
  grid.resolution = resolution;

  auto seg_domain = [&](std::size_t i) {
    double lo = 0.0, hi = kInf;
    if (const auto* t = std::get_if<Tabulated>(&s.segments[i].efficiency)) {
      lo = t->x_min();
      hi = t->x_max();
    }
    return std::pair{lo, hi};
  };

  if (const auto* m = std::get_if<StaticBudget>(&s.resource)) {
    for (std::size_t j = 0; j + 1 < act.size(); ++j) {
      auto [dlo, dhi] = seg_domain(act[j]);
      grid.bounds.push_back({std::max(1e-3 * m->total, dlo),
                             std::min(m->total * (1.0 - 1e-3), dhi)});
    }
    return grid;
  }

  if (const auto* m = std::get_if<AreaEnergy>(&s.resource)) {
    double a_lo = 1e-3 * m->area_total;
    // reference area for the voltage cap: a quarter of an equal split, since
    // sizing it from the smallest representable area would blow the cap up
    // and waste most of the voltage axis
    double a_ref = m->area_total / (4.0 * static_cast<double>(act.size()));
    for (std::size_t j = 0; j + 1 < act.size(); ++j)
      grid.bounds.push_back({a_lo, m->area_total * (1.0 - 1e-3)});
    for (std::size_t j = 0; j < act.size(); ++j) {
      double w = s.segments[act[j]].weight;
      double v_hi = std::sqrt(m->energy_total / (w * std::sqrt(a_ref)));
      grid.bounds.push_back({v_hi * 1e-3, v_hi});
    }
    return grid;
  }

  // coupled models tie every coordinate together through the constraint, so a
  // fixed box is either too wide for the caller's resolution or misses the
  // optimum whenever the budget is elastic (efficiency exponents near one move
  // the binding point by orders of magnitude).  Each variable first gets a
  // hard cap from the constraint term it controls on its own; a log-spaced
  // scan then zooms onto the near-optimal region until the box is narrow
  // enough for a linear grid to resolve.
  const std::size_t d = act.size();
  auto budget_total = [&]() -> double {
    if (const auto* m = std::get_if<EnergyBudget>(&s.resource)) return m->total;
    if (const auto* m = std::get_if<TdpBudget>(&s.resource)) return m->total;
    return std::get<InstantaneousPower>(s.resource).total;
  };
  auto own_term = [&](std::size_t i, double x) -> double {
    const Segment& seg = s.segments[i];
    if (std::holds_alternative<EnergyBudget>(s.resource))
      return seg.weight * eval(seg.efficiency, x) * x;
    if (const auto* m = std::get_if<TdpBudget>(&s.resource)) return m->k[i] * x;
    return (1.0 + std::get<InstantaneousPower>(s.resource).k[i]) * x;
  };
  const double B = budget_total();
  std::vector<double> lo(d), hi(d), cap(d);
  for (std::size_t j = 0; j < d; ++j) {
    auto [dlo, dhi] = seg_domain(act[j]);
    double floor = std::max(dlo * (1.0 + 1e-12), 1e-300);
    double xh = std::max(1.0, floor);
    int guard = 0;
    while (own_term(act[j], xh) < B && xh < dhi && ++guard <= 300)
      xh = std::min(xh * 2.0, dhi);
    if (own_term(act[j], xh) >= B) {
      double xl = std::max(xh * 1e-6, floor);
      for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (xl + xh);
        (own_term(act[j], mid) < B ? xl : xh) = mid;
      }
    }
    cap[j] = std::min(xh, dhi);
    // sixty decades of headroom: an elastic budget can put the optimum almost
    // arbitrarily far below the single-term cap
    lo[j] = std::max(cap[j] * 1e-60, floor);
    hi[j] = cap[j];
  }

  // each stage keeps, per axis, the hull of cells whose objective sits within
  // a tolerance of the stage best, so a flat valley keeps its full width
  // while steep directions collapse quickly
  const int zoom_res = d <= 2 ? 48 : (d == 3 ? 20 : 10);
  std::vector<double> probe(s.segments.size(), 0.0);
  bool found = false;
  double tol = 0.5;
  for (int stage = 0; stage < 10; ++stage) {
    std::vector<std::vector<double>> axes(d);
    double ratio = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      double ll = std::log(lo[j]), lh = std::log(hi[j]);
      axes[j].resize(zoom_res);
      for (int i = 0; i < zoom_res; ++i)
        axes[j][i] = std::exp(ll + (lh - ll) * i / (zoom_res - 1.0));
      ratio = std::max(ratio, std::exp((lh - ll) / (zoom_res - 1.0)));
    }
    std::vector<std::vector<double>> slice(d, std::vector<double>(zoom_res, kInf));
    std::vector<std::size_t> idx(d, 0);
    double best = kInf;
    while (true) {
      for (std::size_t j = 0; j < d; ++j) probe[act[j]] = axes[j][idx[j]];
      if (within(constraint_usage(s, probe))) {
        double obj = weighted_cost(s, probe);
        best = std::min(best, obj);
        for (std::size_t j = 0; j < d; ++j)
          slice[j][idx[j]] = std::min(slice[j][idx[j]], obj);
      }
      std::size_t j = 0;
      while (j < d && ++idx[j] == static_cast<std::size_t>(zoom_res)) idx[j++] = 0;
      if (j == d) break;
    }
    if (best == kInf) break;
    found = true;
    bool done = ratio < 1.002;
    for (std::size_t j = 0; j < d; ++j) {
      auto [dlo, dhi] = seg_domain(act[j]);
      int a = zoom_res - 1, b = 0;
      for (int i = 0; i < zoom_res; ++i)
        if (slice[j][i] <= best * (1.0 + tol)) {
          a = std::min(a, i);
          b = std::max(b, i);
        }
      // pad by one cell; an interval touching a box edge doubles the reach on
      // that side since the optimum may lie beyond it
      double glo = axes[j][std::max(a - 1, 0)];
      double ghi = axes[j][std::min(b + 1, zoom_res - 1)];
      double span = std::log(hi[j] / lo[j]);
      if (a == 0) {
        glo = axes[j][0] * std::exp(-span);
        done = false;
      }
      if (b == zoom_res - 1 && hi[j] < std::min(cap[j], dhi) * (1.0 - 1e-9)) {
        ghi = axes[j][zoom_res - 1] * std::exp(span);
        done = false;
      }
      lo[j] = std::max(glo, std::max(dlo * (1.0 + 1e-12), 1e-300));
      hi[j] = std::min({ghi, cap[j], dhi});
      if (!(hi[j] > lo[j])) lo[j] = hi[j] * 0.99;
    }
    if (done) break;
    tol = std::max(0.02, tol * 0.25);
  }

  for (std::size_t j = 0; j < d; ++j) {
    auto [dlo, dhi] = seg_domain(act[j]);
    if (!found) {
      grid.bounds.push_back({std::max(cap[j] * 1e-4, dlo * (1.0 + 1e-12)), cap[j]});
      continue;
    }
    grid.bounds.push_back({lo[j], hi[j]});
  }
  return grid;
}

bool perturbation_check(const Scenario& s, const Allocation& a, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("perturbation_check: step must be positive");
  const auto act = active_indices(s);
  const bool is_area = std::holds_alternative<AreaEnergy>(s.resource);
  const double improvement = 1e-12;

  auto objective = [&](const std::vector<double>& x, const std::vector<double>& v) {
    return is_area ? weighted_cost(s, x, v) : weighted_cost(s, x);
  };
  auto feasible = [&](const std::vector<double>& x, const std::vector<double>& v) {
    for (std::size_t i : act) {
      if (!in_domain(s.segments[i].efficiency, x[i])) return false;
      if (is_area && !(v[i] > 0.0)) return false;
    }
    return within(is_area ? constraint_usage(s, x, v) : constraint_usage(s, x));
  };

  const double base = objective(a.x, a.voltage);
  std::vector<double> x = a.x;
  std::vector<double> v = a.voltage;

  for (std::size_t i : act) {
    for (std::size_t j : act) {
      if (i == j) continue;
      x[i] += step;
      x[j] -= step;
      if (feasible(x, v) && objective(x, v) < base - improvement) return false;
      x[i] = a.x[i];
      x[j] = a.x[j];
    }
    if (is_area) {
      for (double sign : {1.0, -1.0}) {
        v[i] += sign * step;
        if (feasible(x, v) && objective(x, v) < base - improvement) return false;
        v[i] = a.voltage[i];
      }
    }
  }
  return true;
}

}  // namespace multiamdahl::oracle
