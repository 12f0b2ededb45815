#pragma once

// JSON run configuration: scenario, solver, online and target-source sections.

#include <optional>
#include <string>

#include "covert_pursuit/online_mpc.hpp"
#include "covert_pursuit/pdcae_solver.hpp"
#include "covert_pursuit/scenario.hpp"

namespace covert {

struct RunConfig {
  ScenarioConfig scenario;
  SolverOptions solver;
  OnlineOptions online;
  /// Target track file; the closed-form track is generated when empty.
  std::optional<std::string> target_path;
};

/// Parses a configuration document. Every section and key is optional; unknown keys
/// and ill-typed values raise UsageError.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Full configuration with every key spelled out; parse_run_config(to_json(c)) == c.
std::string to_json(const RunConfig& config);

/// Loads the target track named by the config (relative paths resolve against base_dir)
/// or generates the closed-form one.
TargetTrack resolve_track(const RunConfig& config, const std::string& base_dir = ".");

}  // namespace covert
