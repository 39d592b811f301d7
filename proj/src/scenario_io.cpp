#include "multiamdahl/scenario_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace multiamdahl::io {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw SchemaError(path, msg);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void expect_object(const json& node, const std::string& path,
                   std::initializer_list<const char*> required,
                   std::initializer_list<const char*> optional) {
  if (!node.is_object()) fail(path, "expected an object");
  for (const auto& item : node.items()) {
    bool known = false;
    for (const char* k : required) known = known || item.key() == k;
    for (const char* k : optional) known = known || item.key() == k;
    if (!known) fail(join(path, item.key()), "unknown key");
  }
  for (const char* k : required)
    if (!node.contains(k)) fail(join(path, k), "missing required key");
}

double get_number(const json& node, const std::string& path, const char* key) {
  const json& v = node.at(key);
  if (!v.is_number()) fail(join(path, key), "expected a number");
  return v.get<double>();
}

std::string get_string(const json& node, const std::string& path, const char* key) {
  const json& v = node.at(key);
  if (!v.is_string()) fail(join(path, key), "expected a string");
  return v.get<std::string>();
}

EfficiencyFunction parse_function(const json& node, const std::string& path) {
  if (!node.is_object() || !node.contains("type")) fail(join(path, "type"), "missing required key");
  std::string type = get_string(node, path, "type");
  try {
    if (type == "power_law") {
      expect_object(node, path, {"type", "alpha", "beta"}, {});
      return PowerLaw{get_number(node, path, "alpha"), get_number(node, path, "beta")};
    }
    if (type == "cache") {
      expect_object(node, path, {"type", "base", "rate", "t_hit", "t_miss"}, {});
      return Cache{SaturatingCurve{get_number(node, path, "base"), get_number(node, path, "rate")},
                   get_number(node, path, "t_hit"), get_number(node, path, "t_miss")};
    }
    if (type == "branch") {
      expect_object(node, path, {"type", "base", "rate", "t_mispredict"}, {});
      return Branch{SaturatingCurve{get_number(node, path, "base"), get_number(node, path, "rate")},
                    get_number(node, path, "t_mispredict")};
    }
    if (type == "throughput") {
      expect_object(node, path, {"type", "t_unit"}, {});
      return Throughput{get_number(node, path, "t_unit")};
    }
    if (type == "tabulated") {
      expect_object(node, path, {"type", "points"}, {});
      const json& pts = node.at("points");
      if (!pts.is_array()) fail(join(path, "points"), "expected an array of [x, f] pairs");
      std::vector<std::pair<double, double>> samples;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const json& p = pts[i];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
          fail(join(path, "points") + "." + std::to_string(i), "expected an [x, f] number pair");
        samples.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
      return Tabulated{std::move(samples)};
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  fail(join(path, "type"), "unknown function type '" + type + "'");
}

std::vector<double> parse_k(const json& node, const std::string& path, std::size_t n) {
  if (!node.contains("k")) return std::vector<double>(n, 0.0);
  const json& k = node.at("k");
  if (!k.is_array()) fail(join(path, "k"), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (!k[i].is_number()) fail(join(path, "k") + "." + std::to_string(i), "expected a number");
    out.push_back(k[i].get<double>());
  }
  return out;
}

ResourceModel parse_resource(const json& node, const std::string& path, std::size_t n) {
  if (!node.is_object() || !node.contains("type")) fail(join(path, "type"), "missing required key");
  std::string type = get_string(node, path, "type");
  if (type == "static") {
    expect_object(node, path, {"type", "budget"}, {});
    return StaticBudget{get_number(node, path, "budget")};
  }
  if (type == "inst_power") {
    expect_object(node, path, {"type", "budget"}, {"k"});
    return InstantaneousPower{get_number(node, path, "budget"), parse_k(node, path, n)};
  }
  if (type == "energy") {
    expect_object(node, path, {"type", "budget"}, {"k"});
    return EnergyBudget{get_number(node, path, "budget"), parse_k(node, path, n)};
  }
  if (type == "tdp") {
    expect_object(node, path, {"type", "budget"}, {"k"});
    return TdpBudget{get_number(node, path, "budget"), parse_k(node, path, n)};
  }
  if (type == "area_energy") {
    expect_object(node, path, {"type", "area", "energy"}, {});
    return AreaEnergy{get_number(node, path, "area"), get_number(node, path, "energy")};
  }
  fail(join(path, "type"), "unknown resource type '" + type + "'");
}

solver::SolverConfig parse_solver(const json& node, const std::string& path) {
  expect_object(node, path, {},
                {"multiplier_tol", "budget_tol", "kkt_tol", "max_bisect_iters",
                 "max_outer_iters"});
  solver::SolverConfig cfg;
  if (node.contains("multiplier_tol")) cfg.multiplier_tol = get_number(node, path, "multiplier_tol");
  if (node.contains("budget_tol")) cfg.budget_tol = get_number(node, path, "budget_tol");
  if (node.contains("kkt_tol")) cfg.kkt_tol = get_number(node, path, "kkt_tol");
  if (node.contains("max_bisect_iters"))
    cfg.max_bisect_iters = static_cast<int>(get_number(node, path, "max_bisect_iters"));
  if (node.contains("max_outer_iters"))
    cfg.max_outer_iters = static_cast<int>(get_number(node, path, "max_outer_iters"));
  if (!(cfg.multiplier_tol > 0.0) || !(cfg.budget_tol > 0.0) || !(cfg.kkt_tol > 0.0) ||
      cfg.max_bisect_iters < 1 || cfg.max_outer_iters < 1)
    fail(path, "solver overrides must be positive");
  return cfg;
}

ParsedScenario build(const json& doc) {
  expect_object(doc, "", {"segments", "resource", "objective"}, {"solver"});

  const json& segs = doc.at("segments");
  if (!segs.is_array() || segs.empty()) fail("segments", "expected a non-empty array");
  std::vector<Segment> segments;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    std::string spath = "segments." + std::to_string(i);
    expect_object(segs[i], spath, {"name", "weight", "function"}, {});
    segments.push_back({get_string(segs[i], spath, "name"), get_number(segs[i], spath, "weight"),
                        parse_function(segs[i].at("function"), join(spath, "function"))});
  }

  ResourceModel resource = parse_resource(doc.at("resource"), "resource", segments.size());

  std::string obj = get_string(doc, "", "objective");
  Objective objective;
  if (obj == "total_time")
    objective = Objective::total_time;
  else if (obj == "average_latency")
    objective = Objective::average_latency;
  else
    fail("objective", "expected \"total_time\" or \"average_latency\"");

  solver::SolverConfig cfg;
  if (doc.contains("solver")) cfg = parse_solver(doc.at("solver"), "solver");

  try {
    return ParsedScenario{Scenario(std::move(segments), std::move(resource), objective), cfg};
  } catch (const std::exception& e) {
    fail("", e.what());
  }
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail("", std::string("not valid JSON: ") + e.what());
  }
}

}  // namespace

ParsedScenario parse_scenario(const std::string& json_text) { return build(parse_text(json_text)); }

ParsedScenario parse_scenario_override(const std::string& json_text,
                                       const std::string& param_path, double value) {
  json doc = parse_text(json_text);
  if (param_path.empty()) fail("", "empty parameter path");

  std::vector<std::string> tokens;
  std::stringstream ss(param_path);
  for (std::string tok; std::getline(ss, tok, '.');) tokens.push_back(tok);

  json* cur = &doc;
  std::string walked;
  for (const std::string& tok : tokens) {
    walked = join(walked, tok);
    if (cur->is_array()) {
      bool numeric = !tok.empty() &&
                     std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); });
      if (numeric) {
        std::size_t idx = std::stoul(tok);
        if (idx >= cur->size()) fail(walked, "array index out of range");
        cur = &(*cur)[idx];
        continue;
      }
      json* match = nullptr;
      for (auto& el : *cur)
        if (el.is_object() && el.contains("name") && el["name"] == tok) match = &el;
      if (!match) fail(walked, "no array element named '" + tok + "'");
      cur = match;
    } else if (cur->is_object()) {
      if (!cur->contains(tok)) fail(walked, "no such key");
      cur = &(*cur)[tok];
    } else {
      fail(walked, "path descends into a scalar");
    }
  }
  if (!cur->is_number()) fail(walked, "parameter path must end at a number");
  *cur = value;
  return build(doc);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace multiamdahl::io
