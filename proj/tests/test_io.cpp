#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <stdexcept>
#include <string>

#include "helpers.hpp"
#include "multiamdahl/model.hpp"
#include "multiamdahl/scenario_io.hpp"

using namespace multiamdahl;
using io::SchemaError;

namespace {

const char* kMinimal = R"({
  "segments": [
    {"name": "serial", "weight": 0.6, "function": {"type": "power_law", "alpha": 1.0, "beta": 0.5}},
    {"name": "parallel", "weight": 0.4, "function": {"type": "power_law", "alpha": 1.0, "beta": 1.0}}
  ],
  "resource": {"type": "static", "budget": 16},
  "objective": "total_time"
})";

std::string check_path(const std::string& text, const std::string& expect) {
  try {
    io::parse_scenario(text);
  } catch (const SchemaError& e) {
    return e.path() == expect ? "" : "wrong path: " + e.path();
  }
  return "no SchemaError";
}

std::string replaced(std::string text, const std::string& from, const std::string& to) {
  auto at = text.find(from);
  if (at == std::string::npos) throw std::logic_error("replaced: pattern not found");
  text.replace(at, from.size(), to);
  return text;
}

}  // namespace

TEST_CASE("minimal document parses with default solver settings") {
  io::ParsedScenario p = io::parse_scenario(kMinimal);
  REQUIRE(p.scenario.segments.size() == 2);
  CHECK(p.scenario.segments[0].name == "serial");
  CHECK(p.scenario.segments[0].weight == 0.6);
  CHECK(std::get<PowerLaw>(p.scenario.segments[1].efficiency).beta == 1.0);
  CHECK(std::get<StaticBudget>(p.scenario.resource).total == 16.0);
  CHECK(p.scenario.objective == Objective::total_time);
  CHECK(p.config.kkt_tol == 1e-7);
  CHECK(p.config.max_bisect_iters == 200);
}

TEST_CASE("every function type round-trips through the parser") {
  std::string text = R"({
    "segments": [
      {"name": "pl", "weight": 0.2, "function": {"type": "power_law", "alpha": 2.0, "beta": 0.7}},
      {"name": "c", "weight": 0.2, "function": {"type": "cache", "base": 0.5, "rate": 1.0, "t_hit": 1.0, "t_miss": 10.0}},
      {"name": "b", "weight": 0.2, "function": {"type": "branch", "base": 0.8, "rate": 2.0, "t_mispredict": 20.0}},
      {"name": "u", "weight": 0.2, "function": {"type": "throughput", "t_unit": 2.0}},
      {"name": "t", "weight": 0.2, "function": {"type": "tabulated", "points": [[1, 1], [2, 0.5], [4, 0.3]]}}
    ],
    "resource": {"type": "static", "budget": 10},
    "objective": "average_latency"
  })";
  io::ParsedScenario p = io::parse_scenario(text);
  REQUIRE(p.scenario.segments.size() == 5);
  CHECK(eval(p.scenario.segments[0].efficiency, 1.0) == doctest::Approx(0.5));
  CHECK(eval(p.scenario.segments[1].efficiency, 1.0) == doctest::Approx(5.5));
  CHECK(eval(p.scenario.segments[2].efficiency, 1.0) == doctest::Approx(4.0));
  CHECK(eval(p.scenario.segments[3].efficiency, 4.0) == doctest::Approx(0.5));
  CHECK(eval(p.scenario.segments[4].efficiency, 2.0) == doctest::Approx(0.5));
  CHECK(p.scenario.objective == Objective::average_latency);
}

TEST_CASE("resource models parse with optional leakage vectors") {
  std::string inst = R"({
    "segments": [
      {"name": "a", "weight": 0.5, "function": {"type": "power_law", "alpha": 1, "beta": 1}},
      {"name": "b", "weight": 0.5, "function": {"type": "power_law", "alpha": 1, "beta": 1}}
    ],
    "resource": {"type": "inst_power", "budget": 3, "k": [0.25, 0.25]},
    "objective": "total_time"
  })";
  auto pi = io::parse_scenario(inst);
  const auto& ip = std::get<InstantaneousPower>(pi.scenario.resource);
  CHECK(ip.total == 3.0);
  CHECK(ip.k == std::vector<double>{0.25, 0.25});

  std::string energy = replaced(inst, "inst_power", "energy");
  const auto& e = std::get<EnergyBudget>(io::parse_scenario(energy).scenario.resource);
  CHECK(e.k.size() == 2);

  std::string tdp = replaced(inst, "\"inst_power\"", "\"tdp\"");
  tdp = replaced(tdp, ", \"k\": [0.25, 0.25]", "");
  const auto& t = std::get<TdpBudget>(io::parse_scenario(tdp).scenario.resource);
  CHECK(t.k == std::vector<double>{0.0, 0.0});  // defaults to no leakage

  std::string area =
      replaced(inst, "{\"type\": \"inst_power\", \"budget\": 3, \"k\": [0.25, 0.25]}",
               "{\"type\": \"area_energy\", \"area\": 2, \"energy\": 1}");
  const auto& av = std::get<AreaEnergy>(io::parse_scenario(area).scenario.resource);
  CHECK(av.area_total == 2.0);
  CHECK(av.energy_total == 1.0);
}

TEST_CASE("solver overrides apply and are validated") {
  std::string text = kMinimal;
  text.insert(text.rfind('}'), R"(, "solver": {"kkt_tol": 1e-9, "max_outer_iters": 250})");
  io::ParsedScenario p = io::parse_scenario(text);
  CHECK(p.config.kkt_tol == 1e-9);
  CHECK(p.config.max_outer_iters == 250);
  CHECK(p.config.budget_tol == 1e-9);  // untouched default

  std::string bad = kMinimal;
  bad.insert(bad.rfind('}'), R"(, "solver": {"kkt_tol": -1})");
  CHECK_THROWS_AS(io::parse_scenario(bad), SchemaError);
}

TEST_CASE("unknown keys are rejected with their full path") {
  std::string top = kMinimal;
  top.insert(top.rfind('}'), R"(, "extra": 1)");
  CHECK(check_path(top, "extra") == "");

  std::string fn = replaced(kMinimal, "\"beta\": 0.5", "\"beta\": 0.5, \"gamma\": 2");
  CHECK(check_path(fn, "segments.0.function.gamma") == "");

  std::string seg = replaced(kMinimal, "\"weight\": 0.4", "\"weight\": 0.4, \"foo\": true");
  CHECK(check_path(seg, "segments.1.foo") == "");
}

TEST_CASE("missing and mistyped fields carry their location") {
  std::string no_budget =
      replaced(kMinimal, "\"type\": \"static\", \"budget\": 16", "\"type\": \"static\"");
  CHECK(check_path(no_budget, "resource.budget") == "");

  std::string stringy = replaced(kMinimal, "\"weight\": 0.6", "\"weight\": \"heavy\"");
  CHECK(check_path(stringy, "segments.0.weight") == "");

  std::string bad_obj = replaced(kMinimal, "\"total_time\"", "\"fastest\"");
  CHECK(check_path(bad_obj, "objective") == "");

  std::string bad_res = replaced(kMinimal, "\"static\"", "\"magic\"");
  CHECK(check_path(bad_res, "resource.type") == "");

  std::string bad_fn = replaced(kMinimal, "\"power_law\"", "\"mystery\"");
  CHECK(check_path(bad_fn, "segments.0.function.type") == "");

  std::string bad_pts = R"({
    "segments": [{"name": "t", "weight": 1, "function": {"type": "tabulated", "points": [[1, 1], [2]]}}],
    "resource": {"type": "static", "budget": 4},
    "objective": "total_time"
  })";
  CHECK(check_path(bad_pts, "segments.0.function.points.1") == "");
}

TEST_CASE("construction failures surface as schema errors") {
  std::string dup = replaced(kMinimal, "\"parallel\"", "\"serial\"");
  CHECK_THROWS_AS(io::parse_scenario(dup), SchemaError);

  CHECK_THROWS_WITH_AS(io::parse_scenario("{nope"),
                       doctest::Contains("not valid JSON"), SchemaError);
}

TEST_CASE("numeric overrides reach into arrays by index or name") {
  auto a = io::parse_scenario_override(kMinimal, "resource.budget", 64.0);
  CHECK(std::get<StaticBudget>(a.scenario.resource).total == 64.0);

  auto b = io::parse_scenario_override(kMinimal, "segments.0.weight", 0.9);
  CHECK(b.scenario.segments[0].weight == 0.9);

  auto c = io::parse_scenario_override(kMinimal, "segments.parallel.function.alpha", 3.0);
  CHECK(std::get<PowerLaw>(c.scenario.segments[1].efficiency).alpha == 3.0);
}

TEST_CASE("override paths are checked before the value lands") {
  CHECK_THROWS_AS(io::parse_scenario_override(kMinimal, "resource.bogus", 1.0), SchemaError);
  CHECK_THROWS_AS(io::parse_scenario_override(kMinimal, "segments.7.weight", 1.0), SchemaError);
  CHECK_THROWS_AS(io::parse_scenario_override(kMinimal, "segments.turbo.weight", 1.0), SchemaError);
  CHECK_THROWS_AS(io::parse_scenario_override(kMinimal, "objective.x", 1.0), SchemaError);
  CHECK_THROWS_AS(io::parse_scenario_override(kMinimal, "segments.0.name", 1.0), SchemaError);
  CHECK_THROWS_AS(io::parse_scenario_override(kMinimal, "", 1.0), SchemaError);

  // the override must still produce a valid scenario
  CHECK_THROWS_AS(io::parse_scenario_override(kMinimal, "segments.0.weight", -2.0), SchemaError);
}

TEST_CASE("read_file slurps bytes and reports missing files") {
  testutil::TempDir dir("io");
  std::string path = dir.path("doc.json");
  {
    std::ofstream out(path, std::ios::binary);
    out << kMinimal;
  }
  CHECK(io::read_file(path) == kMinimal);
  CHECK_THROWS_AS(io::read_file(dir.path("missing.json")), std::runtime_error);
}
