#pragma once

// Run reports: exact-model per-slot breakdown, feasibility audit, energy totals and
// deterministic JSON / CSV emission.

#include <optional>
#include <string>
#include <vector>

#include "covert_pursuit/pdcae_solver.hpp"
#include "covert_pursuit/scenario.hpp"

namespace covert {

struct SlotBreakdown {
  std::size_t t = 0;
  Waypoint position;
  double q = 0.0;
  double ph_exact = 0.0;   // propulsion power at the slot's speed (W)
  double pv = 0.0;         // thrust power (W)
  double ps_exact = 0.0;   // harvested solar power (W)
  double ps_linear = 0.0;  // linear bound used by the solver (W)
  double f = 0.0;          // disguise reward under the run's weights
  double d2 = 0.0;         // horizontal distance to the target (m)
  double d3 = 0.0;         // 3D distance to the target (m)
  double dz = 0.0;         // altitude change (m)
};

struct FeasibilityAudit {
  bool ok = true;
  std::vector<std::string> violations;
  std::vector<MobilityViolation> mobility;
  double max_d3 = 0.0;
  /// Smallest exact-model causality margin divided by eta0 E0 / delta.
  double min_causality_margin_rel = 0.0;
  /// Largest |1/q^2 - q^2 - v^2/v0^2| / (1/q^2) over slots with nonzero speed.
  double max_q_residual = 0.0;
};

struct EnergyTotals {
  double consumed_J = 0.0;   // sum (P_h + P_v) delta
  double propulsion_J = 0.0;
  double thrust_J = 0.0;
  double harvested_J = 0.0;  // exact solar model
  double harvested_linear_J = 0.0;
  double average_power_W = 0.0;
  std::optional<double> saved_vs_baseline_J;
  std::string baseline;
};

/// One executed tick of an online run.
struct TickRecord {
  std::size_t tau = 0;
  Waypoint position;
  double predicted_err = 0.0;     // |predicted - true| target position for the executed slot (m)
  double energy_consumed = 0.0;   // cumulative (J)
  double energy_harvested = 0.0;  // cumulative (J)
  double reserve = 0.0;           // battery energy left (J)
  bool ffr_ok = true;
  std::string mode;               // "nominal", "soft_ffr" or "pursuit"
  int outer_iterations = 0;
};

struct RunReport {
  std::string scheme;
  ScenarioConfig config;  // weights actually used by the run
  SolverOptions options;
  SolarLinearApprox solar;
  TargetTrack track;
  TrajectoryPlan plan;
  std::vector<IterationRecord> iterations;
  std::vector<SlotBreakdown> slots;
  FeasibilityAudit audit;
  EnergyTotals energy;
  double objective_exact = 0.0;         // sum (P_h + P_v - f) under the run's weights (W)
  double objective_exact_scaled = 0.0;  // same times delta (J)
  double common_mu1 = 0.0;
  double common_mu2 = 0.0;
  double common_objective = 0.0;        // (P_h + P_v - f) delta under the common weights (J)
  double disguise_total = 0.0;          // sum f_t under the common weights
  double M_initial = 0.0;
  double M_final = 0.0;
  bool converged = false;
  std::string status;                   // "converged", "max_iters", ...
  /// Input configuration document embedded verbatim in the JSON; rebuilt from
  /// `config` and `options` when empty.
  std::string config_json;
  double wall_time_s = 0.0;             // kept out of the JSON so reports stay reproducible

  // Online runs only.
  std::vector<TickRecord> ticks;
  std::optional<std::size_t> first_ffr_loss_tick;
  std::size_t fallback_ticks = 0;
  std::optional<double> prediction_rms;
};

/// Fills breakdown, audit, totals and objectives for `plan`. `common` supplies the
/// weights of the common-weights objective (usually the unmodified scenario).
RunReport make_report(const std::string& scheme, const ScenarioConfig& run_cfg, const ScenarioConfig& common,
                      const SolverOptions& opts, const SolarLinearApprox& solar, const TargetTrack& track,
                      const TrajectoryPlan& plan, std::vector<IterationRecord> iterations, bool converged);

/// Deterministic JSON (fixed key order, shortest round-trip number formatting).
std::string report_json(const RunReport& report);

std::string trajectory_csv(const RunReport& report);
std::string iterations_csv(const RunReport& report);
std::string ticks_csv(const RunReport& report);

/// Writes `content` to a temporary sibling and renames it over `path`.
void atomic_write(const std::string& path, const std::string& content);

/// Writes report.json, trajectory.csv, iterations.csv (and ticks.csv for online runs)
/// under `dir` with file names prefixed by `stem`.
void write_report_files(const std::string& dir, const std::string& stem, const RunReport& report);

}  // namespace covert
