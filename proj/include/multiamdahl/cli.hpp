#pragma once

#include <string>

namespace multiamdahl::cli {

// Exit codes shared by all commands:
//   0 success
//   1 usage or I/O failure
//   2 infeasible scenario
//   3 solver non-convergence
//   4 schema violation or invalid model
//   5 verification gap (cmd_verify only)
// Every failure prints a single line "error:<category>:<message>" to stderr.

struct SweepRange {
  double from = 0.0;
  double to = 0.0;
  int steps = 0;
  bool log = false;
};

// Solve one scenario file and print the allocation; optionally also write it
// as CSV.
int cmd_solve(const std::string& scenario_file, const std::string& csv_out = "");

// Re-solve across a range of one scalar parameter (dot-separated path into
// the scenario document) and write the sweep as CSV.
int cmd_sweep(const std::string& scenario_file, const std::string& param_path,
              const SweepRange& range, const std::string& out_csv);

// Cross-check the solver against the grid oracle and a perturbation test.
int cmd_verify(const std::string& scenario_file, int resolution = 200);

// Regenerate a named analysis artifact (fig2b, fig3, fig4, eq5_table) as
// CSV + SVG inside outdir.
int cmd_reproduce(const std::string& figure, const std::string& outdir);

}  // namespace multiamdahl::cli
