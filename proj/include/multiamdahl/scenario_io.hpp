#pragma once

// JSON scenario documents:
//
//   {
//     "segments": [
//       {"name": "serial", "weight": 0.6,
//        "function": {"type": "power_law", "alpha": 1.0, "beta": 0.5}}
//     ],
//     "resource": {"type": "static", "budget": 16},
//     "objective": "total_time",
//     "solver": {"kkt_tol": 1e-7}            // optional overrides
//   }
//
// Function types: power_law {alpha, beta}; cache {base, rate, t_hit, t_miss};
// branch {base, rate, t_mispredict}; throughput {t_unit};
// tabulated {points: [[x, f], ...]}.
// Resource types: static {budget}; inst_power | energy | tdp {budget, k?};
// area_energy {area, energy}.  Unknown keys anywhere are rejected.

#include <stdexcept>
#include <string>

#include "multiamdahl/model.hpp"
#include "multiamdahl/solver.hpp"

namespace multiamdahl::io {

class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& path, const std::string& message)
      : std::runtime_error(path.empty() ? message : message + " (at " + path + ")"),
        path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct ParsedScenario {
  Scenario scenario;
  solver::SolverConfig config;
};

ParsedScenario parse_scenario(const std::string& json_text);

// Parses after replacing one numeric leaf, addressed by a dot-separated path.
// Array elements are addressed by index or, for segments, by name:
// "resource.budget", "segments.0.weight", "segments.serial.function.alpha".
ParsedScenario parse_scenario_override(const std::string& json_text,
                                       const std::string& param_path, double value);

// Whole-file read; std::runtime_error when the file cannot be opened.
std::string read_file(const std::string& path);

}  // namespace multiamdahl::io
