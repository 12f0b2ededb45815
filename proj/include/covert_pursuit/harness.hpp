#pragma once

// Scheme runs, comparisons and weight sweeps behind the command-line tool.

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "covert_pursuit/config_io.hpp"
#include "covert_pursuit/report.hpp"

namespace covert {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNonConvergence = 3;
inline constexpr int kExitInfeasible = 4;

/// Offline scheme names followed by "online".
std::vector<std::string> all_schemes();

/// Runs `scheme` ("online" or an offline scheme name) on the configured scenario.
/// The report embeds `config` as its configuration snapshot.
RunReport run_scheme(const RunConfig& config, const std::string& scheme, const TargetTrack& track);

struct SchemeOutcome {
  std::string scheme;
  std::optional<RunReport> report;
  std::string error;
  int exit_code = kExitOk;
};

/// run_scheme with every failure mapped to an exit code instead of an exception.
SchemeOutcome run_guarded(const RunConfig& config, const std::string& scheme, const TargetTrack& track);

/// Exit code of the exception currently being handled.
int exit_code_for_current_exception(std::string& message);

/// Worker count for `jobs` independent runs, capped by COVERT_PURSUIT_THREADS when set.
std::size_t worker_limit(std::size_t jobs);

/// Calls body(i) for i in [0, n) on up to worker_limit(n) threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Runs the schemes concurrently. When "dst" is among them, every other report gets its
/// energy saving relative to the distance-based baseline.
std::vector<SchemeOutcome> run_schemes(const RunConfig& config, const TargetTrack& track,
                                       const std::vector<std::string>& schemes);

struct ComparisonRow {
  std::string scheme;
  std::string status;
  int exit_code = kExitOk;
  std::string error;
  double common_objective_J = 0.0;
  double objective_J = 0.0;
  double energy_J = 0.0;
  double harvested_J = 0.0;
  double disguise_total = 0.0;
  double max_d3 = 0.0;
  std::size_t iterations = 0;
  bool audit_ok = false;
  std::optional<double> saved_vs_dst_J;
};

std::vector<ComparisonRow> comparison_rows(const std::vector<SchemeOutcome>& outcomes);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

struct ParetoPoint {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double power_W = 0.0;   // average consumed power
  double energy_J = 0.0;
  double disguise = 0.0;  // sum over slots of f_t under (mu1, mu2)
  double objective_J = 0.0;
  bool converged = false;
  std::string start;      // "shadow" or the mu1 of the neighbour whose plan seeded the kept solve
  std::string status;
  std::string error;
};

/// mu1 = i / (points - 1), i = 0..points-1 (a single point means mu1 = 0).
std::vector<double> pareto_grid(std::size_t points);

/// Proposed-scheme solves per weight pair (mu1, 1 - mu1). Every point first starts from the
/// shadow plan; continuation passes then re-solve each point from its neighbours' plans and
/// keep whichever result has the lower objective under the point's own weights.
std::vector<ParetoPoint> pareto_sweep(const RunConfig& config, const TargetTrack& track,
                                      const std::vector<double>& mu1_grid, int continuation_passes = 3);
std::string pareto_csv(const std::vector<ParetoPoint>& points);

/// Power spread across the two highest-disguise points over the spread of the whole sweep
/// (0 when the sweep spread is zero). Failed points are skipped.
double pareto_saturation_ratio(const std::vector<ParetoPoint>& points);

// Command implementations. Each returns the process exit code and writes a one-line summary to `out`.
int run_command(const std::string& config_path, const std::string& scheme, const std::string& out_dir,
                std::ostream& out);
int compare_command(const std::string& config_path, const std::vector<std::string>& schemes,
                    const std::string& out_dir, std::ostream& out);
int sweep_command(const std::string& config_path, std::size_t points, const std::string& out_dir, std::ostream& out);
int oracle_command(const std::string& config_path, double grid_step, const std::string& out_dir, std::ostream& out);
int fit_solar_command(const std::string& config_path, std::optional<std::array<double, 2>> band,
                      std::optional<int> samples, std::ostream& out);

}  // namespace covert
