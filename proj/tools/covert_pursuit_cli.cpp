#include <array>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covert_pursuit/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Trajectory planning for a solar-powered covert monitoring UAV"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = "out";

  auto* run = app.add_subcommand("run", "Solve one scheme and write its report");
  std::string scheme = "proposed";
  run->add_option("--config", config, "JSON configuration")->required();
  run->add_option("--scheme", scheme, "proposed, dko, aco, ndp, dst, mdr or online");
  run->add_option("--out", out_dir, "Output directory");

  auto* compare = app.add_subcommand("compare", "Run several schemes on one scenario");
  std::vector<std::string> schemes;
  compare->add_option("--config", config, "JSON configuration")->required();
  compare->add_option("--schemes", schemes, "Schemes to compare")->delimiter(',')->required();
  compare->add_option("--out", out_dir, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Disguise-weight sweep with mu1 + mu2 = 1");
  std::size_t points = 11;
  sweep->add_option("--config", config, "JSON configuration")->required();
  sweep->add_option("--points", points, "Number of evenly spaced mu1 values in [0, 1]");
  sweep->add_option("--out", out_dir, "Output directory");

  auto* oracle = app.add_subcommand("oracle", "Brute-force check of a mission with at most three slots");
  double grid = 0.5;
  oracle->add_option("--config", config, "JSON configuration")->required();
  oracle->add_option("--grid", grid, "Lattice step (m)");
  oracle->add_option("--out", out_dir, "Output directory");

  auto* fit = app.add_subcommand("fit-solar", "Fit the linear lower bound of the solar model");
  std::vector<double> band;
  int samples = 0;
  fit->add_option("--config", config, "JSON configuration")->required();
  fit->add_option("--band", band, "Altitude band: low high (m)")->expected(2);
  fit->add_option("--samples", samples, "Least-squares sample count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : covert::kExitUsage;
  }

  if (run->parsed()) return covert::run_command(config, scheme, out_dir, std::cout);
  if (compare->parsed()) return covert::compare_command(config, schemes, out_dir, std::cout);
  if (sweep->parsed()) return covert::sweep_command(config, points, out_dir, std::cout);
  if (oracle->parsed()) return covert::oracle_command(config, grid, out_dir, std::cout);
  std::optional<std::array<double, 2>> z_band;
  if (!band.empty()) z_band = std::array<double, 2>{band[0], band[1]};
  std::optional<int> n_samples;
  if (samples > 0) n_samples = samples;
  return covert::fit_solar_command(config, z_band, n_samples, std::cout);
}
