#include "multiamdahl/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <variant>
#include <vector>

#include "multiamdahl/model.hpp"
#include "multiamdahl/oracle.hpp"
#include "multiamdahl/report.hpp"
#include "multiamdahl/scenario_io.hpp"
#include "multiamdahl/scenarios.hpp"
#include "multiamdahl/solver.hpp"

namespace multiamdahl::cli {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

template <typename F>
int guarded(F&& fn) {
  try {
    return fn();
  } catch (const io::SchemaError& e) {
    std::fprintf(stderr, "error:schema:%s\n", e.what());
    return 4;
  } catch (const InvalidModelError& e) {
    std::fprintf(stderr, "error:model:%s\n", e.what());
    return 4;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "error:infeasible:%s\n", e.what());
    return 2;
  } catch (const NonConvergenceError& e) {
    std::fprintf(stderr, "error:nonconvergence:%s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error:usage:%s\n", e.what());
    return 1;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error:usage:%s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error:io:%s\n", e.what());
    return 1;
  }
}

std::string fmt(double v) {
  if (v == 0.0) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double primary_budget(const Scenario& s) {
  return std::visit(overloaded{[](const StaticBudget& m) { return m.total; },
                               [](const InstantaneousPower& m) { return m.total; },
                               [](const EnergyBudget& m) { return m.total; },
                               [](const TdpBudget& m) { return m.total; },
                               [](const AreaEnergy& m) { return m.area_total; }},
                    s.resource);
}

void print_allocation(const Scenario& s, const Allocation& a) {
  const bool av = std::holds_alternative<AreaEnergy>(s.resource);
  if (av)
    std::printf("%-16s %16s %16s %16s %16s\n", "segment", "area", "voltage", "f", "contribution");
  else
    std::printf("%-16s %16s %16s %16s\n", "segment", "x", "f(x)", "contribution");
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    const Segment& seg = s.segments[i];
    if (seg.weight == 0.0) {
      if (av)
        std::printf("%-16s %16.10g %16.10g %16s %16.10g\n", seg.name.c_str(), 0.0, 0.0, "-", 0.0);
      else
        std::printf("%-16s %16.10g %16s %16.10g\n", seg.name.c_str(), 0.0, "-", 0.0);
      continue;
    }
    double f = av ? area_voltage_eff(a.x[i], a.voltage[i]) : eval(seg.efficiency, a.x[i]);
    if (av)
      std::printf("%-16s %16.10g %16.10g %16.10g %16.10g\n", seg.name.c_str(), a.x[i],
                  a.voltage[i], f, seg.weight * f);
    else
      std::printf("%-16s %16.10g %16.10g %16.10g\n", seg.name.c_str(), a.x[i], f, seg.weight * f);
  }
  std::printf("objective %s\n", fmt(a.objective_value).c_str());
  std::printf("multipliers");
  for (double m : a.multipliers) std::printf(" %s", fmt(m).c_str());
  std::printf("\n");
  std::printf("kkt_residual %s\n", fmt(a.kkt_residual).c_str());
  for (const auto& u : constraint_usage(s, a))
    std::printf("usage %-12s %s / %s\n", u.id.c_str(), fmt(u.lhs).c_str(), fmt(u.budget).c_str());
  if (a.local_only)
    std::printf("note: non-convex input, solution is stationary but not certified global\n");
  if (a.degenerate_constraint)
    std::printf("note: constraint is allocation-independent, objective is flat\n");
}

void write_solution_csv(const Scenario& s, const Allocation& a, const std::string& path) {
  const bool av = std::holds_alternative<AreaEnergy>(s.resource);
  std::string body = av ? "segment,area,voltage,f,contribution\n" : "segment,x,f,contribution\n";
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    const Segment& seg = s.segments[i];
    double f = 0.0, contrib = 0.0;
    if (seg.weight > 0.0) {
      f = av ? area_voltage_eff(a.x[i], a.voltage[i]) : eval(seg.efficiency, a.x[i]);
      contrib = seg.weight * f;
    }
    body += seg.name + ',' + fmt(a.x[i]);
    if (av) body += ',' + fmt(seg.weight > 0.0 ? a.voltage[i] : 0.0);
    body += ',' + fmt(f) + ',' + fmt(contrib) + '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out.good()) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<double> spaced(double from, double to, int steps, bool log) {
  std::vector<double> out;
  for (int i = 0; i < steps; ++i) {
    double t = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    out.push_back(log ? from * std::pow(to / from, t) : from + (to - from) * t);
  }
  return out;
}

void note_written(const std::string& path, std::size_t bytes) {
  std::printf("wrote %s (%zu bytes)\n", path.c_str(), bytes);
}

void reproduce_fig2b(const std::filesystem::path& dir) {
  report::Table t;
  t.columns = {{"t_parallel", "fraction"},
               {"a_serial_dedicated", "area"},
               {"a_serial_pooled", "area"}};
  const double area = 16.0;
  for (int i = 1; i <= 99; ++i) {
    double tp = i / 100.0;
    auto ded = scenarios::solve_hill_marty(tp, area, scenarios::HillMartyMode::dedicated);
    auto pool = scenarios::solve_hill_marty(tp, area, scenarios::HillMartyMode::pooled);
    t.rows.push_back({tp, ded.x[0], pool.x[0]});
  }
  auto csv = (dir / "fig2b.csv").string();
  auto svg = (dir / "fig2b.svg").string();
  note_written(csv, report::write_csv(t, csv));
  note_written(svg, report::write_svg_line(t, "t_parallel",
                                           {"a_serial_dedicated", "a_serial_pooled"}, svg));
}

void reproduce_fig3(const std::filesystem::path& dir) {
  report::Table t;
  t.columns = {{"n_over_alpha", ""}, {"delta", ""}, {"speedup", ""}};
  for (int i = 0; i < 50; ++i) {
    double ratio = (1.0 / 200.0) * std::pow(200.0, i / 49.0);
    for (int j = 0; j < 99; ++j) {
      double delta = 0.99 * j / 98.0;
      double sp = scenarios::het_speedup({1, 1.0 / ratio, delta, 1.0, 0.5});
      t.rows.push_back({ratio, delta, sp});
    }
  }
  auto csv = (dir / "fig3.csv").string();
  auto svg = (dir / "fig3.svg").string();
  note_written(csv, report::write_csv(t, csv));
  note_written(svg, report::write_svg_heatmap(t, "n_over_alpha", "delta", "speedup", svg));
}

void reproduce_fig4(const std::filesystem::path& dir) {
  const std::vector<double> designs{0.3, 0.5, 0.7, 0.9};
  report::Table t;
  t.columns = {{"delta", ""}};
  for (double d : designs) {
    char name[16];
    std::snprintf(name, sizeof(name), "d_%.1f", d);
    t.columns.push_back({name, ""});
  }
  t.columns.push_back({"optimal", ""});
  for (int j = 0; j <= 99; ++j) {
    double delta = j / 100.0;
    std::vector<double> row{delta};
    for (double d : designs)
      row.push_back(scenarios::sensitivity_speedup({1, 50.0, delta, 1.0, d}));
    row.push_back(scenarios::het_speedup({1, 50.0, delta, 1.0, 0.5}));
    t.rows.push_back(row);
  }
  auto csv = (dir / "fig4.csv").string();
  auto svg = (dir / "fig4.svg").string();
  note_written(csv, report::write_csv(t, csv));
  note_written(svg, report::write_svg_line(t, "delta",
                                           {"d_0.3", "d_0.5", "d_0.7", "d_0.9", "optimal"}, svg));
}

// Example accelerator mix; the speedup factors are representative published
// gains for crypto, DSP and media accelerators, not calibrated measurements.
void reproduce_eq5_table(const std::filesystem::path& dir) {
  std::vector<Segment> segs{
      {"cpu", 0.4, PowerLaw{1.0, 1.0}},
      {"crypto", 0.3, PowerLaw{30.0, 1.0}},
      {"dsp", 0.2, PowerLaw{100.0, 0.5}},
      {"media", 0.1, PowerLaw{256.0, 0.8}},
  };
  Scenario s(segs, StaticBudget{16.0}, Objective::total_time);
  Allocation a = solver::closed_form_powerlaw(s);
  report::Table t;
  t.columns = {{"segment", "index"}, {"weight", ""},     {"alpha", ""},     {"beta", ""},
               {"area", ""},         {"area_share", ""}, {"time_share", ""}};
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& p = std::get<PowerLaw>(segs[i].efficiency);
    double time = segs[i].weight * eval(segs[i].efficiency, a.x[i]);
    t.rows.push_back({static_cast<double>(i + 1), segs[i].weight, p.alpha, p.beta, a.x[i],
                      a.x[i] / 16.0, time / a.objective_value});
  }
  auto csv = (dir / "eq5_table.csv").string();
  auto svg = (dir / "eq5_table.svg").string();
  note_written(csv, report::write_csv(t, csv));
  note_written(svg, report::write_svg_line(t, "segment", {"area_share", "time_share"}, svg));
}

}  // namespace

int cmd_solve(const std::string& scenario_file, const std::string& csv_out) {
  return guarded([&] {
    auto parsed = io::parse_scenario(io::read_file(scenario_file));
    Allocation a = solver::solve(parsed.scenario, parsed.config);
    print_allocation(parsed.scenario, a);
    if (!csv_out.empty()) write_solution_csv(parsed.scenario, a, csv_out);
    return 0;
  });
}

int cmd_sweep(const std::string& scenario_file, const std::string& param_path,
              const SweepRange& range, const std::string& out_csv) {
  return guarded([&] {
    if (range.steps < 2) throw std::invalid_argument("sweep needs at least 2 steps");
    if (!(std::isfinite(range.from) && std::isfinite(range.to)) || range.from == range.to)
      throw std::invalid_argument("sweep needs distinct finite endpoints");
    if (range.log && !(range.from > 0.0 && range.to > 0.0))
      throw std::invalid_argument("log sweeps need positive endpoints");
    if (out_csv.empty()) throw std::invalid_argument("sweep needs an output file");

    const std::string text = io::read_file(scenario_file);
    report::Table t;
    bool av = false;
    for (double v : spaced(range.from, range.to, range.steps, range.log)) {
      auto parsed = io::parse_scenario_override(text, param_path, v);
      const Scenario& s = parsed.scenario;
      Allocation a = solver::solve(s, parsed.config);
      if (t.columns.empty()) {
        av = std::holds_alternative<AreaEnergy>(s.resource);
        t.columns.push_back({param_path, ""});
        t.columns.push_back({"objective", ""});
        for (const auto& seg : s.segments) t.columns.push_back({"x_" + seg.name, ""});
        if (av)
          for (const auto& seg : s.segments) t.columns.push_back({"v_" + seg.name, ""});
      }
      std::vector<double> row{v, a.objective_value};
      row.insert(row.end(), a.x.begin(), a.x.end());
      if (av) row.insert(row.end(), a.voltage.begin(), a.voltage.end());
      t.rows.push_back(std::move(row));
    }
    note_written(out_csv, report::write_csv(t, out_csv));
    return 0;
  });
}

int cmd_verify(const std::string& scenario_file, int resolution) {
  return guarded([&] {
    auto parsed = io::parse_scenario(io::read_file(scenario_file));
    const Scenario& s = parsed.scenario;
    Allocation a = solver::solve(s, parsed.config);
    oracle::GridSpec grid = oracle::default_grid_spec(s, resolution);
    Allocation g = oracle::grid_search(s, grid);
    double gap = (a.objective_value - g.objective_value) / g.objective_value;
    bool pert = oracle::perturbation_check(s, a, 1e-4 * primary_budget(s));
    std::printf("solver_objective %s\n", fmt(a.objective_value).c_str());
    std::printf("grid_objective %s\n", fmt(g.objective_value).c_str());
    std::printf("relative_gap %s\n", fmt(gap).c_str());
    std::printf("perturbation %s\n", pert ? "pass" : "fail");
    if (gap > 1e-3) {
      std::fprintf(stderr, "error:verify:relative gap %s exceeds 1e-3\n", fmt(gap).c_str());
      return 5;
    }
    if (!pert) {
      std::fprintf(stderr, "error:verify:perturbation found an improving feasible move\n");
      return 5;
    }
    return 0;
  });
}

int cmd_reproduce(const std::string& figure, const std::string& outdir) {
  return guarded([&] {
    std::filesystem::path dir(outdir.empty() ? "." : outdir);
    std::filesystem::create_directories(dir);
    if (figure == "fig2b")
      reproduce_fig2b(dir);
    else if (figure == "fig3")
      reproduce_fig3(dir);
    else if (figure == "fig4")
      reproduce_fig4(dir);
    else if (figure == "eq5_table")
      reproduce_eq5_table(dir);
    else
      throw std::invalid_argument("unknown artifact '" + figure +
                                  "', expected fig2b, fig3, fig4 or eq5_table");
    return 0;
  });
}

}  // namespace multiamdahl::cli
