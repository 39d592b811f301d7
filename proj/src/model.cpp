#include "multiamdahl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace multiamdahl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_domain(double x) {
  if (!std::isfinite(x) || x <= 0.0)
    throw std::domain_error("efficiency functions are defined for finite x > 0");
}

}  // namespace

PowerLaw::PowerLaw(double alpha_, double beta_) : alpha(alpha_), beta(beta_) {
  require(std::isfinite(alpha) && alpha > 0.0, "PowerLaw: alpha must be positive");
  require(std::isfinite(beta) && beta > 0.0, "PowerLaw: beta must be positive");
}

SaturatingCurve::SaturatingCurve(double base_, double rate_) : base(base_), rate(rate_) {
  require(std::isfinite(base) && base >= 0.0 && base < 1.0,
          "SaturatingCurve: base must lie in [0, 1)");
  require(std::isfinite(rate) && rate > 0.0, "SaturatingCurve: rate must be positive");
}

double SaturatingCurve::value(double x) const {
  double raw = 1.0 - (1.0 - base) * std::pow(x, -rate);
  return raw < 0.0 ? 0.0 : raw;
}

double SaturatingCurve::deriv(double x) const {
  if (1.0 - (1.0 - base) * std::pow(x, -rate) < 0.0) return 0.0;
  return (1.0 - base) * rate * std::pow(x, -rate - 1.0);
}

double SaturatingCurve::flat_below() const { return std::pow(1.0 - base, 1.0 / rate); }

Cache::Cache(SaturatingCurve hit_, double t_hit_, double t_miss_)
    : hit(hit_), t_hit(t_hit_), t_miss(t_miss_) {
  require(std::isfinite(t_hit) && t_hit > 0.0, "Cache: t_hit must be positive");
  require(std::isfinite(t_miss) && t_miss > t_hit, "Cache: t_miss must exceed t_hit");
}

Branch::Branch(SaturatingCurve predict_, double t_mispredict_)
    : predict(predict_), t_mispredict(t_mispredict_) {
  require(std::isfinite(t_mispredict) && t_mispredict > 0.0,
          "Branch: t_mispredict must be positive");
}

Throughput::Throughput(double t_unit_) : t_unit(t_unit_) {
  require(std::isfinite(t_unit) && t_unit > 0.0, "Throughput: t_unit must be positive");
}

Tabulated::Tabulated(std::vector<std::pair<double, double>> pts) : points(std::move(pts)) {
  require(points.size() >= 2, "Tabulated: need at least two points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto [x, f] = points[i];
    require(std::isfinite(x) && x > 0.0 && std::isfinite(f) && f > 0.0,
            "Tabulated: points must be finite and positive");
    if (i > 0) {
      require(x > points[i - 1].first, "Tabulated: x values must be strictly increasing");
      require(f < points[i - 1].second, "Tabulated: f values must be strictly decreasing");
    }
  }
}

namespace {

double tabulated_eval(const Tabulated& t, double x) {
  if (x < t.x_min() || x > t.x_max())
    throw std::domain_error("Tabulated: x outside the sampled range");
  const auto& p = t.points;
  auto it = std::upper_bound(p.begin(), p.end(), x,
                             [](double v, const auto& q) { return v < q.first; });
  std::size_t hi = std::min<std::size_t>(it - p.begin(), p.size() - 1);
  std::size_t lo = hi == 0 ? 0 : hi - 1;
  if (lo == hi) return p[lo].second;
  double u = (std::log(x) - std::log(p[lo].first)) /
             (std::log(p[hi].first) - std::log(p[lo].first));
  return std::exp(std::log(p[lo].second) +
                  u * (std::log(p[hi].second) - std::log(p[lo].second)));
}

double tabulated_deriv(const Tabulated& t, double x) {
  double h = std::max(1e-6 * x, 1e-9);
  double lo = std::max(x - h, t.x_min());
  double hi = std::min(x + h, t.x_max());
  if (hi <= lo) return 0.0;
  return (tabulated_eval(t, hi) - tabulated_eval(t, lo)) / (hi - lo);
}

}  // namespace

double eval(const EfficiencyFunction& f, double x) {
  check_domain(x);
  return std::visit(
      overloaded{
          [&](const PowerLaw& p) { return 1.0 / (p.alpha * std::pow(x, p.beta)); },
          [&](const Cache& c) {
            double h = c.hit.value(x);
            return h * c.t_hit + (1.0 - h) * c.t_miss;
          },
          [&](const Branch& b) { return (1.0 - b.predict.value(x)) * b.t_mispredict; },
          [&](const Throughput& u) { return u.t_unit / x; },
          [&](const Tabulated& t) { return tabulated_eval(t, x); },
      },
      f);
}

double eval_deriv(const EfficiencyFunction& f, double x) {
  check_domain(x);
  return std::visit(
      overloaded{
          [&](const PowerLaw& p) { return -p.beta / (p.alpha * std::pow(x, p.beta + 1.0)); },
          [&](const Cache& c) { return c.hit.deriv(x) * (c.t_hit - c.t_miss); },
          [&](const Branch& b) { return -b.predict.deriv(x) * b.t_mispredict; },
          [&](const Throughput& u) { return -u.t_unit / (x * x); },
          [&](const Tabulated& t) { return tabulated_deriv(t, x); },
      },
      f);
}

bool is_convex(const EfficiencyFunction& f) {
  const auto* t = std::get_if<Tabulated>(&f);
  if (t == nullptr) return true;
  // piecewise power law: convex iff the log-log slope magnitude never grows
  const auto& p = t->points;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    double b = -(std::log(p[i + 1].second) - std::log(p[i].second)) /
               (std::log(p[i + 1].first) - std::log(p[i].first));
    if (b > prev * (1.0 + 1e-12)) return false;
    prev = b;
  }
  return true;
}

Scenario::Scenario(std::vector<Segment> segments_, ResourceModel resource_, Objective objective_)
    : segments(std::move(segments_)), resource(std::move(resource_)), objective(objective_) {
  require(!segments.empty(), "Scenario: needs at least one segment");
  std::set<std::string> names;
  bool any_positive = false;
  for (const auto& s : segments) {
    require(!s.name.empty(), "Scenario: segment names must be non-empty");
    require(names.insert(s.name).second, "Scenario: segment names must be unique");
    require(std::isfinite(s.weight) && s.weight >= 0.0,
            "Scenario: segment weights must be non-negative");
    if (s.weight > 0.0) any_positive = true;
  }
  require(any_positive, "Scenario: at least one segment weight must be positive");

  auto check_k = [&](const std::vector<double>& k) {
    require(k.size() == segments.size(), "Scenario: k must have one entry per segment");
    for (double v : k)
      require(std::isfinite(v) && v >= 0.0, "Scenario: k entries must be non-negative");
  };
  std::visit(overloaded{
                 [&](const StaticBudget& m) {
                   require(std::isfinite(m.total) && m.total > 0.0,
                           "Scenario: budget must be positive");
                 },
                 [&](const InstantaneousPower& m) {
                   require(std::isfinite(m.total) && m.total > 0.0,
                           "Scenario: budget must be positive");
                   check_k(m.k);
                 },
                 [&](const EnergyBudget& m) {
                   require(std::isfinite(m.total) && m.total > 0.0,
                           "Scenario: budget must be positive");
                   check_k(m.k);
                 },
                 [&](const TdpBudget& m) {
                   require(std::isfinite(m.total) && m.total > 0.0,
                           "Scenario: budget must be positive");
                   check_k(m.k);
                 },
                 [&](const AreaEnergy& m) {
                   require(std::isfinite(m.area_total) && m.area_total > 0.0,
                           "Scenario: area budget must be positive");
                   require(std::isfinite(m.energy_total) && m.energy_total > 0.0,
                           "Scenario: energy budget must be positive");
                   require(objective == Objective::total_time,
                           "Scenario: AreaEnergy supports the total-time objective only");
                 },
             },
             resource);
}

double weighted_cost(const Scenario& s, std::span<const double> x) {
  require(x.size() == s.segments.size(), "weighted_cost: x must have one entry per segment");
  require(!std::holds_alternative<AreaEnergy>(s.resource),
          "weighted_cost: AreaEnergy needs the (area, voltage) overload");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (s.segments[i].weight == 0.0) continue;
    sum += s.segments[i].weight * eval(s.segments[i].efficiency, x[i]);
  }
  return sum;
}

double area_voltage_eff(double a, double v) { return 1.0 / (v * std::sqrt(a)); }

double area_voltage_energy(double w, double a, double v) { return w * std::sqrt(a) * v * v; }

double weighted_cost(const Scenario& s, std::span<const double> area,
                     std::span<const double> voltage) {
  require(std::holds_alternative<AreaEnergy>(s.resource),
          "weighted_cost: (area, voltage) overload is for AreaEnergy scenarios");
  require(area.size() == s.segments.size() && voltage.size() == s.segments.size(),
          "weighted_cost: area and voltage must have one entry per segment");
  double sum = 0.0;
  for (std::size_t i = 0; i < area.size(); ++i) {
    if (s.segments[i].weight == 0.0) continue;
    check_domain(area[i]);
    check_domain(voltage[i]);
    sum += s.segments[i].weight * area_voltage_eff(area[i], voltage[i]);
  }
  return sum;
}

std::vector<ConstraintUsage> constraint_usage(const Scenario& s, std::span<const double> x) {
  require(x.size() == s.segments.size(),
          "constraint_usage: x must have one entry per segment");
  const auto& segs = s.segments;
  // f-weighted sums skip zero-weight segments: their terms are exactly zero
  // and their x (conventionally zero) lies outside the function domain.
  auto cost_terms = [&](auto&& per_segment) {
    double sum = 0.0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (segs[i].weight == 0.0) continue;
      sum += per_segment(i);
    }
    return sum;
  };
  return std::visit(
      overloaded{
          [&](const StaticBudget& m) {
            double sum = 0.0;
            for (double v : x) sum += v;
            return std::vector<ConstraintUsage>{{"budget", sum, m.total}};
          },
          [&](const InstantaneousPower& m) {
            double shared = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) shared += m.k[j] * x[j];
            std::vector<ConstraintUsage> out;
            out.reserve(segs.size());
            for (std::size_t i = 0; i < segs.size(); ++i)
              out.push_back({"power:" + segs[i].name, x[i] + shared, m.total});
            return out;
          },
          [&](const EnergyBudget& m) {
            double shared = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) shared += m.k[j] * x[j];
            double ft = cost_terms(
                [&](std::size_t i) { return segs[i].weight * eval(segs[i].efficiency, x[i]); });
            double ftx = cost_terms([&](std::size_t i) {
              return segs[i].weight * eval(segs[i].efficiency, x[i]) * x[i];
            });
            return std::vector<ConstraintUsage>{{"energy", shared * ft + ftx, m.total}};
          },
          [&](const TdpBudget& m) {
            double shared = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) shared += m.k[j] * x[j];
            double ft = cost_terms(
                [&](std::size_t i) { return segs[i].weight * eval(segs[i].efficiency, x[i]); });
            double ftx = cost_terms([&](std::size_t i) {
              return segs[i].weight * eval(segs[i].efficiency, x[i]) * x[i];
            });
            return std::vector<ConstraintUsage>{{"tdp", shared + ftx / ft, m.total}};
          },
          [&](const AreaEnergy&) -> std::vector<ConstraintUsage> {
            throw std::invalid_argument(
                "constraint_usage: AreaEnergy needs the (area, voltage) overload");
          },
      },
      s.resource);
}

std::vector<ConstraintUsage> constraint_usage(const Scenario& s, std::span<const double> area,
                                              std::span<const double> voltage) {
  const auto* m = std::get_if<AreaEnergy>(&s.resource);
  require(m != nullptr, "constraint_usage: (area, voltage) overload is for AreaEnergy");
  require(area.size() == s.segments.size() && voltage.size() == s.segments.size(),
          "constraint_usage: area and voltage must have one entry per segment");
  double a_sum = 0.0;
  for (double a : area) a_sum += a;
  double e_sum = 0.0;
  for (std::size_t i = 0; i < area.size(); ++i) {
    if (s.segments[i].weight == 0.0) continue;
    e_sum += area_voltage_energy(s.segments[i].weight, area[i], voltage[i]);
  }
  return {{"area", a_sum, m->area_total}, {"energy", e_sum, m->energy_total}};
}

std::vector<ConstraintUsage> constraint_usage(const Scenario& s, const Allocation& a) {
  if (std::holds_alternative<AreaEnergy>(s.resource))
    return constraint_usage(s, a.x, a.voltage);
  return constraint_usage(s, a.x);
}

}  // namespace multiamdahl
