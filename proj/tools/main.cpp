#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "multiamdahl/cli.hpp"

int main(int argc, char** argv) {
  // The environment variable MULTIAMDAHL_SEED is reserved for future
  // stochastic features; every current solver is deterministic, so it is a
  // documented no-op.

  CLI::App app{"multiamdahl: optimal resource allocation across workload segments"};
  app.require_subcommand(1);

  std::string scenario_file, csv_out, param_path, out_path, figure, outdir;
  multiamdahl::cli::SweepRange range;
  int resolution = 200;

  auto* solve = app.add_subcommand("solve", "solve a scenario file and print the allocation");
  solve->add_option("file", scenario_file, "scenario JSON file")->required();
  solve->add_option("--csv", csv_out, "also write the allocation as CSV");

  auto* sweep = app.add_subcommand("sweep", "re-solve across a range of one scalar parameter");
  sweep->add_option("file", scenario_file, "scenario JSON file")->required();
  sweep->add_option("--param", param_path, "dotted path, e.g. resource.budget")->required();
  sweep->add_option("--from", range.from, "range start")->required();
  sweep->add_option("--to", range.to, "range end")->required();
  sweep->add_option("--steps", range.steps, "number of points")->required();
  sweep->add_flag("--log", range.log, "space points geometrically");
  sweep->add_option("--out", out_path, "output CSV file")->required();

  auto* verify = app.add_subcommand("verify", "cross-check the solver against the grid oracle");
  verify->add_option("file", scenario_file, "scenario JSON file")->required();
  verify->add_option("--resolution", resolution, "grid points per free dimension");

  auto* reproduce = app.add_subcommand("reproduce", "regenerate a named analysis artifact");
  reproduce->add_option("name", figure, "fig2b | fig3 | fig4 | eq5_table")->required();
  reproduce->add_option("--out", outdir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error:usage:" << e.what() << "\n";
    return 1;
  }

  if (solve->parsed()) return multiamdahl::cli::cmd_solve(scenario_file, csv_out);
  if (sweep->parsed()) return multiamdahl::cli::cmd_sweep(scenario_file, param_path, range, out_path);
  if (verify->parsed()) return multiamdahl::cli::cmd_verify(scenario_file, resolution);
  return multiamdahl::cli::cmd_reproduce(figure, outdir);
}
